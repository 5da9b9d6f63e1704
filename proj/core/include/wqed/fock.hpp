#ifndef WQED_FOCK_HPP
#define WQED_FOCK_HPP

#include <complex>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace wqed {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

// Truncated multi-mode Fock space. Basis ordering is fixed project-wide:
// |n_0 n_1 ... n_{M-1}> with the last mode fastest-varying, so for the
// two-mode case |n_L n_R> the flat index is n_L*(cutoff+1) + n_R.
struct FockSpace {
    int cutoff = 4;   // max photon number per mode
    int n_modes = 2;

    FockSpace() = default;
    FockSpace(int cutoff_per_mode, int modes);

    int levels() const { return cutoff + 1; }
    int dim() const;
    int index(const std::vector<int>& occupation) const;
    std::vector<int> occupation(int flat_index) const;

    bool operator==(const FockSpace& o) const {
        return cutoff == o.cutoff && n_modes == o.n_modes;
    }
};

// Powers (w, x, y, z) of the normally ordered two-mode monomial
// a_L^dag^w a_L^x a_R^dag^y a_R^z.
struct MomentPowers {
    int w = 0, x = 0, y = 0, z = 0;
};

// Single-mode ladder operators embedded in the full tensor space:
// <.., n-1, ..| a |.., n, ..> = sqrt(n) on the given mode.
Matrix annihilation(const FockSpace& space, int mode);
Matrix creation(const FockSpace& space, int mode);
Matrix number_operator(const FockSpace& space, int mode);

// Kronecker product, A acting on the slower-varying factor.
Matrix tensor(const Matrix& a, const Matrix& b);

// a_L^dag^w a_L^x a_R^dag^y a_R^z as a dense matrix (two-mode spaces only).
Matrix moment_operator(const FockSpace& space, const MomentPowers& p);

class DensityMatrix {
  public:
    DensityMatrix(FockSpace space, Matrix entries);

    static DensityMatrix from_pure(const FockSpace& space, const Vector& psi);

    const FockSpace& space() const { return space_; }
    const Matrix& entries() const { return m_; }
    int dim() const { return static_cast<int>(m_.rows()); }

    // Throws std::runtime_error if Hermiticity (1e-10), unit trace (1e-10)
    // or positivity (eigenvalues >= -1e-8) are violated. Eigenvalues in
    // [-1e-8, 0) are clamped to zero and the matrix renormalized.
    void validate();

    // Largest photon number per mode carrying population above `tol`.
    // Highest level whose population exceeds tol; populations below tol
    // contribute truncation error of the same order, which is ignorable.
    int max_occupied(int mode, double tol = 1e-8) const;

  private:
    FockSpace space_;
    Matrix m_;
};

// Ground-truth moment oracle Tr(rho a_L^dag^w a_L^x a_R^dag^y a_R^z).
// Throws if the cutoff leaves no headroom for the requested powers
// (truncation would corrupt the value).
Complex expect_moment(const DensityMatrix& rho, const MomentPowers& p);

// Trace-overlap fidelity Tr(rho * sigma) against a pure target.
double fidelity(const DensityMatrix& rho, const DensityMatrix& target);

// Thermal state with mean occupation n_bar on a single mode of `space`,
// tensored with thermal states of the same occupation on every mode.
DensityMatrix thermal_state(const FockSpace& space, double n_bar);

}  // namespace wqed

#endif
