#include "wqed/dynamics.hpp"

#include <cmath>
#include <fstream>

namespace wqed {

namespace {

Matrix embed_single(int n_qubits, int qubit, const Matrix& op) {
    Matrix out = Matrix::Identity(1, 1);
    for (int q = 0; q < n_qubits; ++q)
        out = tensor(out, q == qubit ? op : Matrix::Identity(2, 2));
    return out;
}

}  // namespace

Matrix qubit_lowering(int n_qubits, int qubit) {
    Matrix sm = Matrix::Zero(2, 2);
    sm(0, 1) = 1.0;  // |g><e|
    return embed_single(n_qubits, qubit, sm);
}

Matrix qubit_pauli_z(int n_qubits, int qubit) {
    Matrix sz = Matrix::Zero(2, 2);
    sz(0, 0) = -1.0;
    sz(1, 1) = 1.0;
    return embed_single(n_qubits, qubit, sz);
}

Matrix qubit_pauli_x(int n_qubits, int qubit) {
    Matrix sx = Matrix::Zero(2, 2);
    sx(0, 1) = 1.0;
    sx(1, 0) = 1.0;
    return embed_single(n_qubits, qubit, sx);
}

Matrix all_excited(int n_qubits) {
    const int d = 1 << n_qubits;
    Matrix rho = Matrix::Zero(d, d);
    rho(d - 1, d - 1) = 1.0;
    return rho;
}

Matrix LindbladGenerator::apply(const Matrix& rho) const {
    Matrix out = Complex(0, -1) * (hamiltonian * rho - rho * hamiltonian);
    for (const auto& [L, rate] : dissipators) {
        const Matrix LdL = L.adjoint() * L;
        out += rate * (L * rho * L.adjoint() - 0.5 * (LdL * rho + rho * LdL));
    }
    return out;
}

Eigen::MatrixXd collective_decay_matrix(const EmitterConfig& config) {
    config.check();
    const int n = static_cast<int>(config.positions.size());
    Eigen::MatrixXd decay(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            decay(i, j) = config.gamma * std::cos(config.phase(i) - config.phase(j));
    return decay;
}

LindbladGenerator build_generator(const EmitterConfig& config,
                                  std::optional<DriveParams> drive) {
    config.check();
    const int n = static_cast<int>(config.positions.size());
    if (n < 1) throw std::invalid_argument("build_generator: need at least one qubit");
    if (drive && n != 1)
        throw std::invalid_argument("build_generator: drive supported for a single qubit only");

    LindbladGenerator gen;
    gen.n_qubits = n;
    const int d = 1 << n;
    gen.hamiltonian = Matrix::Zero(d, d);

    // Exchange coupling, rotating frame at the shared resonance.
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double J = 0.5 * config.gamma *
                             std::sin(std::abs(config.phase(i) - config.phase(j)));
            if (J != 0) {
                Matrix sp_sm = qubit_lowering(n, i).adjoint() * qubit_lowering(n, j);
                gen.hamiltonian += J * (sp_sm + sp_sm.adjoint());
            }
        }
    if (drive) {
        gen.hamiltonian += 0.5 * drive->detuning * qubit_pauli_z(n, 0) +
                           0.5 * drive->omega_p * qubit_pauli_x(n, 0);
    }

    // Correlated decay matrix, diagonalized into independent channels.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(collective_decay_matrix(config));
    for (int k = 0; k < n; ++k) {
        double rate = es.eigenvalues()(k);
        if (rate < -1e-9 * config.gamma)
            throw std::runtime_error("build_generator: collective decay matrix not PSD");
        if (rate <= 0) continue;
        Matrix jump = Matrix::Zero(d, d);
        for (int j = 0; j < n; ++j) jump += es.eigenvectors()(j, k) * qubit_lowering(n, j);
        gen.dissipators.emplace_back(jump, (1.0 + config.n_th) * rate);
        if (config.n_th > 0) gen.dissipators.emplace_back(jump.adjoint(), config.n_th * rate);
    }
    if (config.gamma_phi > 0)
        for (int j = 0; j < n; ++j)
            gen.dissipators.emplace_back(qubit_pauli_z(n, j), 0.5 * config.gamma_phi);

    if ((gen.hamiltonian - gen.hamiltonian.adjoint()).cwiseAbs().maxCoeff() > 1e-12)
        throw std::runtime_error("build_generator: Hamiltonian not Hermitian");
    return gen;
}

namespace {

// Dormand-Prince 5(4) coefficients.
constexpr double A21 = 1.0 / 5;
constexpr double A31 = 3.0 / 40, A32 = 9.0 / 40;
constexpr double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9;
constexpr double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561,
                 A54 = -212.0 / 729;
constexpr double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247,
                 A64 = 49.0 / 176, A65 = -5103.0 / 18656;
constexpr double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192,
                 B5 = -2187.0 / 6784, B6 = 11.0 / 84;
constexpr double E1 = B1 - 5179.0 / 57600, E3 = B3 - 7571.0 / 16695, E4 = B4 - 393.0 / 640,
                 E5 = B5 + 92097.0 / 339200, E6 = B6 - 187.0 / 2100, E7 = -1.0 / 40;

constexpr double RTOL = 1e-9;
constexpr double ATOL = 1e-12;

// One adaptive step from (t, y). Returns the accepted step size actually
// taken and updates y, t and the FSAL derivative k1.
void dp45_step(const LindbladGenerator& gen, Matrix& y, double& t, double& h, Matrix& k1,
               double t_end) {
    for (int attempt = 0; attempt < 60; ++attempt) {
        const double hs = std::min(h, t_end - t);
        Matrix k2 = gen.apply(y + hs * (A21 * k1));
        Matrix k3 = gen.apply(y + hs * (A31 * k1 + A32 * k2));
        Matrix k4 = gen.apply(y + hs * (A41 * k1 + A42 * k2 + A43 * k3));
        Matrix k5 = gen.apply(y + hs * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4));
        Matrix k6 = gen.apply(y + hs * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5));
        Matrix y_new = y + hs * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
        Matrix k7 = gen.apply(y_new);
        Matrix err = hs * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);

        const double scale = ATOL + RTOL * std::max(y.cwiseAbs().maxCoeff(),
                                                    y_new.cwiseAbs().maxCoeff());
        const double err_norm = err.cwiseAbs().maxCoeff() / scale;
        if (!std::isfinite(err_norm)) throw std::runtime_error("evolve: non-finite state");

        if (err_norm <= 1.0) {
            t += hs;
            y = std::move(y_new);
            k1 = std::move(k7);
            const double grow = err_norm > 0 ? 0.9 * std::pow(err_norm, -0.2) : 5.0;
            h = hs * std::clamp(grow, 0.2, 5.0);
            return;
        }
        h = hs * std::clamp(0.9 * std::pow(err_norm, -0.2), 0.2, 1.0);
        if (h < 1e-15 * std::abs(t_end))
            throw std::runtime_error("evolve: step-size underflow (stiff system?)");
    }
    throw std::runtime_error("evolve: step control failed to converge");
}

}  // namespace

Trajectory evolve(const Matrix& rho0, const LindbladGenerator& gen,
                  const std::vector<double>& t_grid) {
    if (t_grid.empty()) throw std::invalid_argument("evolve: empty time grid");
    for (size_t i = 1; i < t_grid.size(); ++i)
        if (!(t_grid[i] > t_grid[i - 1]))
            throw std::invalid_argument("evolve: time grid must be increasing");

    Trajectory traj;
    traj.times = t_grid;
    traj.states.reserve(t_grid.size());

    const Complex trace0 = rho0.trace();
    Matrix y = rho0;
    double t = t_grid.front();
    double h = (t_grid.back() - t_grid.front()) / 100.0;
    Matrix k1 = gen.apply(y);
    traj.states.push_back(y);

    for (size_t i = 1; i < t_grid.size(); ++i) {
        while (t < t_grid[i] - 1e-15 * t_grid.back()) {
            dp45_step(gen, y, t, h, k1, t_grid[i]);
            if (std::abs(trace0) > 1e-12) {
                const double drift = std::abs(y.trace() - trace0);
                traj.max_trace_drift = std::max(traj.max_trace_drift, drift);
                if (drift > 1e-8) throw std::runtime_error("evolve: trace drift exceeds 1e-8");
                y *= trace0 / y.trace();
            }
        }
        traj.states.push_back(y);
    }
    return traj;
}

Matrix output_mode_operator(const EmitterConfig& config, Direction dir) {
    const int n = static_cast<int>(config.positions.size());
    Matrix op = Matrix::Zero(1 << n, 1 << n);
    const double sign = dir == Direction::Left ? -1.0 : 1.0;
    for (int j = 0; j < n; ++j)
        op += std::exp(Complex(0, sign * config.phase(j))) * qubit_lowering(n, j);
    return std::sqrt(config.gamma / 2.0) * op;
}

std::vector<double> output_flux(const Trajectory& traj, const EmitterConfig& config,
                                Direction dir) {
    const Matrix a = output_mode_operator(config, dir);
    const Matrix n_op = a.adjoint() * a;
    std::vector<double> flux;
    flux.reserve(traj.states.size());
    for (const Matrix& rho : traj.states)
        flux.push_back((n_op * rho).trace().real());
    return flux;
}

double integrated_photon_number(const Trajectory& traj, const EmitterConfig& config,
                                Direction dir) {
    if (traj.times.back() - traj.times.front() < 8.0 / config.gamma)
        throw std::invalid_argument("integrated_photon_number: horizon shorter than 8/gamma");
    const std::vector<double> flux = output_flux(traj, config, dir);
    double total = 0;
    for (size_t i = 1; i < flux.size(); ++i)
        total += 0.5 * (flux[i] + flux[i - 1]) * (traj.times[i] - traj.times[i - 1]);
    return total;
}

Complex two_time_g1(const LindbladGenerator& gen, const Matrix& rho0,
                    const EmitterConfig& config, Direction dir, double t, double tau) {
    const Matrix a = output_mode_operator(config, dir);
    Matrix rho_t = rho0;
    if (t > 0) rho_t = evolve(rho0, gen, {0.0, t}).states.back();
    Matrix x = a * rho_t;
    if (tau > 0) x = evolve(x, gen, {0.0, tau}).states.back();
    return (a.adjoint() * x).trace();
}

double cross_coincidence_g2(const LindbladGenerator& gen, const Matrix& rho0,
                            const EmitterConfig& config, double horizon, int grid_points) {
    if (horizon < 8.0 / config.gamma)
        throw std::invalid_argument("cross_coincidence_g2: horizon shorter than 8/gamma");
    const int M = grid_points;
    std::vector<double> grid(M + 1);
    for (int i = 0; i <= M; ++i) grid[i] = horizon * i / M;
    const double dt = horizon / M;

    const Trajectory traj = evolve(rho0, gen, grid);
    const Matrix aL = output_mode_operator(config, Direction::Left);
    const Matrix aR = output_mode_operator(config, Direction::Right);
    const Matrix nL = aL.adjoint() * aL;
    const Matrix nR = aR.adjoint() * aR;

    // G2 = int_0^T ds int_s^T du [ Tr(nR Phi_{u-s}(aL rho(s) aL^dag))
    //                            + Tr(nL Phi_{u-s}(aR rho(s) aR^dag)) ]
    double total = 0;
    for (int i = 0; i < M; ++i) {
        std::vector<double> tail(grid.begin(), grid.begin() + (M - i) + 1);
        const Matrix condL = aL * traj.states[i] * aL.adjoint();
        const Matrix condR = aR * traj.states[i] * aR.adjoint();
        double inner = 0;
        if (condL.cwiseAbs().maxCoeff() + condR.cwiseAbs().maxCoeff() > 1e-14) {
            const Trajectory tL = evolve(condL, gen, tail);
            const Trajectory tR = evolve(condR, gen, tail);
            for (size_t k = 0; k < tail.size(); ++k) {
                const double f = (nR * tL.states[k]).trace().real() +
                                 (nL * tR.states[k]).trace().real();
                inner += (k == 0 || k + 1 == tail.size()) ? 0.5 * f * dt : f * dt;
            }
        }
        total += (i == 0 ? 0.5 : 1.0) * inner * dt;
    }
    return total;
}

void export_trajectory_csv(const Trajectory& traj, const EmitterConfig& config,
                           const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("export_trajectory_csv: cannot open " + path);
    const int n = static_cast<int>(config.positions.size());
    out << "time";
    for (int q = 0; q < n; ++q) out << ",p_excited_q" << q;
    out << ",flux_left,flux_right\n";
    const auto fl = output_flux(traj, config, Direction::Left);
    const auto fr = output_flux(traj, config, Direction::Right);
    out.precision(12);
    for (size_t i = 0; i < traj.times.size(); ++i) {
        out << traj.times[i];
        for (int q = 0; q < n; ++q) {
            const Matrix sm = qubit_lowering(n, q);
            out << "," << ((sm.adjoint() * sm * traj.states[i]).trace().real());
        }
        out << "," << fl[i] << "," << fr[i] << "\n";
    }
}

}  // namespace wqed
