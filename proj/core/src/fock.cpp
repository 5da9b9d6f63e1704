#include "wqed/fock.hpp"

#include <cmath>

namespace wqed {

FockSpace::FockSpace(int cutoff_per_mode, int modes)
    : cutoff(cutoff_per_mode), n_modes(modes) {
    if (cutoff_per_mode < 2) throw std::invalid_argument("FockSpace: cutoff_per_mode must be >= 2");
    if (modes < 1) throw std::invalid_argument("FockSpace: n_modes must be >= 1");
}

int FockSpace::dim() const {
    int d = 1;
    for (int m = 0; m < n_modes; ++m) d *= levels();
    return d;
}

int FockSpace::index(const std::vector<int>& occupation) const {
    if (static_cast<int>(occupation.size()) != n_modes)
        throw std::invalid_argument("FockSpace::index: wrong number of modes");
    int idx = 0;
    for (int m = 0; m < n_modes; ++m) {
        if (occupation[m] < 0 || occupation[m] > cutoff)
            throw std::invalid_argument("FockSpace::index: occupation out of range");
        idx = idx * levels() + occupation[m];
    }
    return idx;
}

std::vector<int> FockSpace::occupation(int flat_index) const {
    std::vector<int> occ(n_modes);
    for (int m = n_modes - 1; m >= 0; --m) {
        occ[m] = flat_index % levels();
        flat_index /= levels();
    }
    return occ;
}

Matrix annihilation(const FockSpace& space, int mode) {
    if (mode < 0 || mode >= space.n_modes)
        throw std::invalid_argument("annihilation: mode out of range");
    const int L = space.levels();
    Matrix single = Matrix::Zero(L, L);
    for (int n = 1; n <= space.cutoff; ++n) single(n - 1, n) = std::sqrt(double(n));

    Matrix op = Matrix::Identity(1, 1);
    for (int m = 0; m < space.n_modes; ++m)
        op = tensor(op, m == mode ? single : Matrix::Identity(L, L));
    return op;
}

Matrix creation(const FockSpace& space, int mode) {
    return annihilation(space, mode).adjoint();
}

Matrix number_operator(const FockSpace& space, int mode) {
    Matrix a = annihilation(space, mode);
    return a.adjoint() * a;
}

Matrix tensor(const Matrix& a, const Matrix& b) {
    const auto ra = a.rows(), ca = a.cols(), rb = b.rows(), cb = b.cols();
    Matrix out(ra * rb, ca * cb);
    for (Eigen::Index i = 0; i < ra; ++i)
        for (Eigen::Index j = 0; j < ca; ++j)
            out.block(i * rb, j * cb, rb, cb) = a(i, j) * b;
    return out;
}

Matrix moment_operator(const FockSpace& space, const MomentPowers& p) {
    if (space.n_modes != 2)
        throw std::invalid_argument("moment_operator: two-mode spaces only");
    const Matrix aL = annihilation(space, 0);
    const Matrix aR = annihilation(space, 1);
    const int d = space.dim();
    Matrix op = Matrix::Identity(d, d);
    for (int i = 0; i < p.w; ++i) op = aL.adjoint() * op;
    for (int i = 0; i < p.x; ++i) op = op * aL;  // applied first to kets
    Matrix right = Matrix::Identity(d, d);
    for (int i = 0; i < p.y; ++i) right = aR.adjoint() * right;
    for (int i = 0; i < p.z; ++i) right = right * aR;
    return op * right;
}

DensityMatrix::DensityMatrix(FockSpace space, Matrix entries)
    : space_(space), m_(std::move(entries)) {
    if (m_.rows() != m_.cols() || m_.rows() != space_.dim())
        throw std::invalid_argument("DensityMatrix: entries do not match space dimension");
    validate();
}

DensityMatrix DensityMatrix::from_pure(const FockSpace& space, const Vector& psi) {
    const double n = psi.norm();
    if (n <= 0) throw std::invalid_argument("DensityMatrix::from_pure: zero vector");
    Vector v = psi / n;
    return DensityMatrix(space, v * v.adjoint());
}

void DensityMatrix::validate() {
    if (!m_.allFinite()) throw std::runtime_error("DensityMatrix: non-finite entries");
    if ((m_ - m_.adjoint()).cwiseAbs().maxCoeff() > 1e-10)
        throw std::runtime_error("DensityMatrix: not Hermitian");
    if (std::abs(m_.trace() - Complex(1.0)) > 1e-10)
        throw std::runtime_error("DensityMatrix: trace != 1");

    Eigen::SelfAdjointEigenSolver<Matrix> es(m_);
    const auto& ev = es.eigenvalues();
    if (ev.minCoeff() < -1e-8)
        throw std::runtime_error("DensityMatrix: negative eigenvalue beyond tolerance");
    if (ev.minCoeff() < 0) {
        Eigen::VectorXd clamped = ev.cwiseMax(0.0);
        clamped /= clamped.sum();
        m_ = es.eigenvectors() * clamped.asDiagonal() * es.eigenvectors().adjoint();
        m_ = 0.5 * (m_ + m_.adjoint().eval());
    }
}

int DensityMatrix::max_occupied(int mode, double tol) const {
    int n_max = 0;
    for (int i = 0; i < dim(); ++i) {
        if (std::abs(m_(i, i)) > tol) {
            int n = space_.occupation(i)[mode];
            if (n > n_max) n_max = n;
        }
    }
    return n_max;
}

Complex expect_moment(const DensityMatrix& rho, const MomentPowers& p) {
    const FockSpace& sp = rho.space();
    if (sp.n_modes != 2) throw std::invalid_argument("expect_moment: two-mode spaces only");
    const int headL = rho.max_occupied(0) + std::max(p.w, p.x);
    const int headR = rho.max_occupied(1) + std::max(p.y, p.z);
    if (headL > sp.cutoff || headR > sp.cutoff)
        throw std::runtime_error("expect_moment: cutoff too small for requested power");
    return (rho.entries() * moment_operator(sp, p)).trace();
}

double fidelity(const DensityMatrix& rho, const DensityMatrix& target) {
    if (rho.dim() != target.dim())
        throw std::invalid_argument("fidelity: dimension mismatch");
    // Target must be pure: trace-overlap fidelity is only a fidelity then.
    const Matrix& s = target.entries();
    if ((s * s - s).cwiseAbs().maxCoeff() > 1e-6)
        throw std::invalid_argument("fidelity: target is not pure");
    Complex f = (rho.entries() * s).trace();
    if (std::abs(f.imag()) > 1e-10)
        throw std::runtime_error("fidelity: non-real overlap");
    return f.real();
}

DensityMatrix thermal_state(const FockSpace& space, double n_bar) {
    if (n_bar < 0) throw std::invalid_argument("thermal_state: n_bar must be >= 0");
    const int L = space.levels();
    Eigen::VectorXd pops(L);
    for (int n = 0; n < L; ++n)
        pops(n) = std::pow(n_bar / (1.0 + n_bar), n) / (1.0 + n_bar);
    pops /= pops.sum();  // renormalize the truncated tail
    Matrix single = pops.asDiagonal();
    Matrix full = Matrix::Identity(1, 1);
    for (int m = 0; m < space.n_modes; ++m) full = tensor(full, single);
    return DensityMatrix(space, full);
}

}  // namespace wqed
