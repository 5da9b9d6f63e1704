#ifndef WQED_EMISSION_HPP
#define WQED_EMISSION_HPP

#include <array>
#include <optional>
#include <vector>

#include "wqed/fock.hpp"

namespace wqed {

// Two resonant emitters coupled to a common waveguide.
struct EmitterConfig {
    std::vector<double> positions;  // meters, strictly increasing
    double omega = 0;               // rad/s, shared resonance
    double v = 1.0;                 // m/s, waveguide speed
    double gamma = 0;               // rad/s, waveguide coupling
    double gamma_phi = 0;           // rad/s, pure dephasing
    double n_th = 0;                // thermal occupation of the waveguide

    double wavelength() const;      // lambda = 2 pi v / omega
    double phase(int qubit) const;  // omega * x_j / v
    void check() const;
};

// Per-qubit Bloch amplitudes alpha|g> + beta|e>, |alpha|^2+|beta|^2 = 1.
struct QubitAmplitudes {
    Complex alpha{1.0, 0.0};
    Complex beta{0.0, 0.0};

    static QubitAmplitudes ground() { return {1.0, 0.0}; }
    static QubitAmplitudes excited() { return {0.0, 1.0}; }
    bool is_excited() const { return std::abs(alpha) < 1e-12; }
};

using QubitPreparation = std::vector<QubitAmplitudes>;

// Photonic state on a two-mode truncated Fock space.
struct TwoModeState {
    FockSpace space;
    Matrix rho;

    DensityMatrix as_density_matrix() const { return DensityMatrix(space, rho); }
};

// The integrated-mode photonic state emitted by the active qubits: each
// excited emitter deposits one photon into the superposition
// (a_L^dag e^{i w x_j / v} + a_R^dag e^{-i w x_j / v}) / sqrt(2).
// Fully excited multi-qubit preparations and the single-qubit Bloch
// preparation are supported; partially excited multi-qubit preparations
// are rejected (their emission dynamics are not modeled here).
TwoModeState emitted_state(const FockSpace& space, const EmitterConfig& config,
                           const QubitPreparation& prep,
                           const std::vector<int>& active);

// Normalized coefficients (a, b, c) of |20>, |02>, |11> for two excited
// emitters at separation dx = d * lambda. Periodic in d with period 1.
std::array<Complex, 3> noon_coefficients(double dx_over_lambda);

// rho -> p00 |00><00| + (1 - p00) rho
TwoModeState with_vacuum_admixture(const TwoModeState& state, double p00);

// Each active qubit independently collapses to |g> with probability p before
// emission; its early photon falls outside the integration window and is
// discarded, so the surviving configurations emit as usual.
TwoModeState with_qubit_decay(const FockSpace& space, const EmitterConfig& config,
                              const std::vector<int>& active, double p);

}  // namespace wqed

#endif
