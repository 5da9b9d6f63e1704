#ifndef WQED_DYNAMICS_HPP
#define WQED_DYNAMICS_HPP

#include <optional>
#include <vector>

#include "wqed/emission.hpp"
#include "wqed/fock.hpp"

namespace wqed {

// Coherent single-qubit probe, H = (dw/2) sigma_z + (Omega_p/2) sigma_x.
struct DriveParams {
    double omega_p = 0;   // Rabi strength, rad/s
    double detuning = 0;  // qubit - probe, rad/s
};

// Effective qubit-register master equation in the frame rotating at the
// shared resonance. Collective decay is diagonalized into independent
// jump channels so the generator is in manifest Lindblad form.
struct LindbladGenerator {
    int n_qubits = 0;
    Matrix hamiltonian;                               // 2^n x 2^n, Hermitian
    std::vector<std::pair<Matrix, double>> dissipators;  // (jump op, rate >= 0)

    int dim() const { return hamiltonian.rows() > 0 ? int(hamiltonian.rows()) : 0; }
    Matrix apply(const Matrix& rho) const;  // right-hand side d(rho)/dt
};

struct Trajectory {
    std::vector<double> times;
    std::vector<Matrix> states;
    double max_trace_drift = 0;
};

// Pauli ladder sigma_- on one qubit of an n-qubit register (|g>=0, |e>=1).
Matrix qubit_lowering(int n_qubits, int qubit);
Matrix qubit_pauli_z(int n_qubits, int qubit);
Matrix qubit_pauli_x(int n_qubits, int qubit);

// Correlated decay matrix Gamma_ij = gamma cos(w(xi-xj)/v); its eigenvalues
// are the rates of the independent collective jump channels.
Eigen::MatrixXd collective_decay_matrix(const EmitterConfig& config);

// Exchange coupling J_ij = (gamma/2) sin(w|xi-xj|/v) and correlated decay
// Gamma_ij = gamma cos(w(xi-xj)/v), reduced to diagonalized jump channels.
// Thermal (n_th > 0) adds the raising-channel counterparts; dephasing adds
// gamma_phi/2 D[sigma_z] per qubit. A drive is only meaningful for one qubit.
LindbladGenerator build_generator(const EmitterConfig& config,
                                  std::optional<DriveParams> drive = std::nullopt);

// Adaptive Dormand-Prince RK45, rtol 1e-9 / atol 1e-12, with a
// trace-restoration guard. Works for any initial matrix (regression states
// included); trace is conserved to the drift bound.
Trajectory evolve(const Matrix& rho0, const LindbladGenerator& gen,
                  const std::vector<double>& t_grid);

// Input-output image of the travelling mode in qubit space:
// a_L = sqrt(gamma/2) sum_j e^{-i w x_j / v} sigma_-^(j)  (conjugate phases for R).
enum class Direction { Left, Right };
Matrix output_mode_operator(const EmitterConfig& config, Direction dir);

// <a_dir^dag a_dir>(t) along a trajectory, photons per second.
std::vector<double> output_flux(const Trajectory& traj, const EmitterConfig& config,
                                Direction dir);

// Trapezoidal time integral of the flux. Requires a horizon of at least
// 8/gamma so the truncated tail is below 1e-3 photons.
double integrated_photon_number(const Trajectory& traj, const EmitterConfig& config,
                                Direction dir);

// <a_dir^dag(t+tau) a_dir(t)> by the quantum regression theorem.
Complex two_time_g1(const LindbladGenerator& gen, const Matrix& rho0,
                    const EmitterConfig& config, Direction dir, double t, double tau);

// Total cross-coincidence between opposite directions over the emission:
// double time integral of <a_L^dag(t) a_R^dag(t') a_R(t') a_L(t)>.
double cross_coincidence_g2(const LindbladGenerator& gen, const Matrix& rho0,
                            const EmitterConfig& config, double horizon,
                            int grid_points = 400);

// Fully excited register |e...e><e...e|.
Matrix all_excited(int n_qubits);

void export_trajectory_csv(const Trajectory& traj, const EmitterConfig& config,
                           const std::string& path);

}  // namespace wqed

#endif
