#include "wqed/tomography.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace wqed {

void MLEConfig::check() const {
    if (cutoff < 2) throw std::invalid_argument("MLEConfig: cutoff must be >= 2");
    if (convergence_tol <= 0) throw std::invalid_argument("MLEConfig: tol must be > 0");
    if (max_iters < 1 || n_restarts < 1) throw std::invalid_argument("MLEConfig: bad iteration counts");
}

namespace {

struct Objective {
    // Flattened operator stacks: row i of trace_map is vec(ops[i]^T), so
    // trace_map * vec(rho) yields all Tr(rho * ops[i]) with one GEMV; op_map
    // and op_adj_map hold vec(ops[i]) and vec(ops[i]^dag) for the gradient.
    Eigen::MatrixXcd trace_map, op_map, op_adj_map;
    Vector targets;
    Eigen::VectorXd weights;

    void add(const Matrix& op, Complex target, double weight) {
        const int d2 = int(op.size());
        const int row = int(trace_map.rows());
        trace_map.conservativeResize(row + 1, d2);
        op_map.conservativeResize(row + 1, d2);
        op_adj_map.conservativeResize(row + 1, d2);
        trace_map.row(row) = Matrix(op.transpose()).reshaped().transpose();
        op_map.row(row) = op.reshaped().transpose();
        op_adj_map.row(row) = Matrix(op.adjoint()).reshaped().transpose();
        targets.conservativeResize(row + 1);
        targets(row) = target;
        weights.conservativeResize(row + 1);
        weights(row) = weight;
    }

    double cost_and_gradient(const Matrix& t, Matrix* grad) const {
        const int d = int(t.rows());
        const Matrix p = t.adjoint() * t;
        const double s = p.trace().real();
        const Matrix rho = p / s;
        const Vector eps = trace_map * rho.reshaped() - targets;
        const double cost = (weights.array() * eps.cwiseAbs2().array()).sum();
        if (grad) {
            const Vector ce = weights.array() * eps.conjugate().array();
            const Vector we = weights.array() * eps.array();
            Matrix x = (op_map.transpose() * ce + op_adj_map.transpose() * we).reshaped(d, d);
            const Complex tr = (x.transpose().cwiseProduct(rho)).sum();
            x.diagonal().array() -= tr;
            *grad = (2.0 / s) * (t * x);
            // parametrization is lower-triangular
            grad->triangularView<Eigen::StrictlyUpper>().setZero();
        }
        return cost;
    }
};

}  // namespace

MLEResult mle_density_matrix(const MomentTable& moments, const MLEConfig& cfg) {
    cfg.check();
    const FockSpace space(cfg.cutoff, 2);
    const int d = space.dim();
    const MomentIndexing ix(moments.order);

    Objective obj;
    double floor = 0;
    for (int i = 0; i < ix.size(); ++i) {
        const MomentPowers p = ix.powers(i);
        const double sigma = std::max(moments.stderrs[i], 1e-4);
        const double w = cfg.weighting == MLEWeighting::InverseVariance ? 1.0 / (sigma * sigma) : 1.0;
        obj.add(moment_operator(space, p), moments.values[i], w);
        floor += w * sigma * sigma;
    }

    Matrix best_t;
    double best_cost = std::numeric_limits<double>::infinity();
    int best_restart = -1;
    bool any_converged = false;

    for (int restart = 0; restart < cfg.n_restarts; ++restart) {
        std::mt19937_64 rng(shard_seed(cfg.seed, 0xA11CE + restart));
        std::normal_distribution<double> gauss(0.0, 1.0);
        Matrix t = Matrix::Zero(d, d);
        for (int i = 0; i < d; ++i) {
            t(i, i) = 1.0 / std::sqrt(double(d)) + 0.1 * gauss(rng);
            for (int j = 0; j < i; ++j) t(i, j) = 0.15 * Complex(gauss(rng), gauss(rng));
        }

        // Adam over the real/imaginary parts of the lower triangle.
        Matrix m = Matrix::Zero(d, d);
        Eigen::MatrixXd v_re = Eigen::MatrixXd::Zero(d, d), v_im = Eigen::MatrixXd::Zero(d, d);
        const double beta1 = 0.9, beta2 = 0.999, eps_adam = 1e-10;
        double lr = 0.02;
        Matrix grad(d, d);
        double cost = obj.cost_and_gradient(t, &grad);
        double prev_window_cost = cost;
        bool converged = false;

        for (int iter = 1; iter <= cfg.max_iters; ++iter) {
            m = beta1 * m + (1.0 - beta1) * grad;
            v_re = beta2 * v_re + (1.0 - beta2) * grad.real().cwiseAbs2().matrix();
            v_im = beta2 * v_im + (1.0 - beta2) * grad.imag().cwiseAbs2().matrix();
            const double bc1 = 1.0 - std::pow(beta1, iter);
            const double bc2 = 1.0 - std::pow(beta2, iter);
            for (int i = 0; i < d; ++i)
                for (int j = 0; j <= i; ++j) {
                    const Complex mh = m(i, j) / bc1;
                    const double dr = std::sqrt(v_re(i, j) / bc2) + eps_adam;
                    const double di = std::sqrt(v_im(i, j) / bc2) + eps_adam;
                    t(i, j) -= lr * Complex(mh.real() / dr, mh.imag() / di);
                }
            cost = obj.cost_and_gradient(t, &grad);
            if (iter % 250 == 0) {
                // Anneal only when a window shows little relative progress, so
                // the step size is not exhausted before the basin is reached.
                const double rel = (prev_window_cost - cost) / std::max(cost, 1e-300);
                if (rel < cfg.convergence_tol) lr *= 0.5;
                // Done when the step size has been annealed away on plateaus
                // (or the misfit is numerically zero).
                if (cost < 1e-14 || lr < 1e-6) {
                    converged = true;
                    break;
                }
                prev_window_cost = cost;
            }
        }
        if (converged) any_converged = true;
        if (cost < best_cost) {
            best_cost = cost;
            best_t = t;
            best_restart = restart;
        }
    }
    if (!any_converged)
        throw std::runtime_error("mle_density_matrix: no restart converged within max_iters");

    const Matrix p = best_t.adjoint() * best_t;
    Matrix rho = p / p.trace().real();
    rho = 0.5 * (rho + rho.adjoint().eval());

    MLEResult result{DensityMatrix(space, rho), best_cost, floor, best_restart};
    if (best_cost > 10.0 * floor)
        throw std::runtime_error("mle_density_matrix: residual exceeds 10x the moment error floor "
                                 "(inconsistent moment set)");
    return result;
}

NoiseFitResult fit_noise_thermal(const MomentTable& noise, Side side) {
    if (noise.order < 1) throw std::invalid_argument("fit_noise_thermal: order must be >= 1");
    std::vector<double> diag;
    for (int n = 1; n <= noise.order; ++n) {
        const MomentPowers p = side == Side::Left ? MomentPowers{n, n, 0, 0}
                                                  : MomentPowers{0, 0, n, n};
        diag.push_back(noise.at(p).real());
    }
    if (diag[0] < 0.5)
        throw std::runtime_error("fit_noise_thermal: first diagonal moment below the vacuum floor, "
                                 "data inconsistent with a thermal noise model");

    auto residual = [&diag](double n_bar) {
        double r = 0;
        double model = 1.0;
        for (size_t n = 1; n <= diag.size(); ++n) {
            model *= double(n) * (n_bar + 1.0);
            const double delta = diag[n - 1] - model;
            r += delta * delta;
        }
        return r;
    };

    // Golden-section search; the first moment pins the scale of the bracket.
    double lo = 0.0, hi = 4.0 * std::max(diag[0] - 1.0, 0.0) + 2.0;
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - gr * (b - a), e = a + gr * (b - a);
    double fc = residual(c), fe = residual(e);
    while (b - a > 1e-12 * (1.0 + hi)) {
        if (fc < fe) {
            b = e; e = c; fe = fc;
            c = b - gr * (b - a);
            fc = residual(c);
        } else {
            a = c; c = e; fc = fe;
            e = a + gr * (b - a);
            fe = residual(e);
        }
    }
    const double n_bar = 0.5 * (a + b);
    return {n_bar, 1.0 / (1.0 + n_bar), residual(n_bar)};
}

}  // namespace wqed
