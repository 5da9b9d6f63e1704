#include "wqed/emission.hpp"

#include <cmath>
#include <numbers>

namespace wqed {

double EmitterConfig::wavelength() const { return 2.0 * std::numbers::pi * v / omega; }

double EmitterConfig::phase(int qubit) const { return omega * positions.at(qubit) / v; }

void EmitterConfig::check() const {
    if (gamma <= 0) throw std::invalid_argument("EmitterConfig: gamma must be > 0");
    if (v <= 0) throw std::invalid_argument("EmitterConfig: v must be > 0");
    if (omega <= 0) throw std::invalid_argument("EmitterConfig: omega must be > 0");
    if (n_th < 0) throw std::invalid_argument("EmitterConfig: n_th must be >= 0");
    if (!std::isfinite(gamma) || !std::isfinite(gamma_phi) || !std::isfinite(n_th))
        throw std::invalid_argument("EmitterConfig: non-finite rate");
    for (size_t j = 1; j < positions.size(); ++j)
        if (!(positions[j] > positions[j - 1]))
            throw std::invalid_argument("EmitterConfig: positions must be strictly increasing");
}

namespace {

Vector emission_amplitudes(const FockSpace& space, const EmitterConfig& config,
                           const QubitPreparation& prep, const std::vector<int>& active) {
    const Matrix adL = creation(space, 0);
    const Matrix adR = creation(space, 1);
    Vector psi = Vector::Zero(space.dim());
    psi(space.index({0, 0})) = 1.0;
    for (int j : active) {
        const QubitAmplitudes& q = prep.at(j);
        const Complex phase = std::exp(Complex(0, config.phase(j)));
        Matrix emit = (phase * adL + std::conj(phase) * adR) / std::sqrt(2.0);
        psi = q.alpha * psi + q.beta * (emit * psi);
    }
    return psi;
}

}  // namespace

TwoModeState emitted_state(const FockSpace& space, const EmitterConfig& config,
                           const QubitPreparation& prep, const std::vector<int>& active) {
    config.check();
    if (static_cast<int>(active.size()) > space.cutoff)
        throw std::invalid_argument("emitted_state: more excited qubits than the cutoff supports");
    int n_partial = 0;
    for (int j : active) {
        const QubitAmplitudes& q = prep.at(j);
        const double norm = std::norm(q.alpha) + std::norm(q.beta);
        if (std::abs(norm - 1.0) > 1e-12)
            throw std::invalid_argument("emitted_state: qubit amplitudes not normalized");
        if (!q.is_excited()) ++n_partial;
    }
    if (n_partial > 0 && active.size() > 1)
        throw std::invalid_argument(
            "emitted_state: partially excited multi-qubit preparations are not modeled");

    Vector psi = emission_amplitudes(space, config, prep, active);
    psi /= psi.norm();
    return TwoModeState{space, psi * psi.adjoint()};
}

std::array<Complex, 3> noon_coefficients(double d) {
    const double two_pi_d = 2.0 * std::numbers::pi * d;
    // Two emitters at {0, d*lambda}: expanding the two emission factors gives
    // sqrt(2) e^{i phi}|20> + sqrt(2) e^{-i phi}|02> + 2 cos(phi)|11>, phi = 2 pi d.
    Complex a = std::exp(Complex(0, two_pi_d)) / std::sqrt(2.0);
    Complex b = std::exp(Complex(0, -two_pi_d)) / std::sqrt(2.0);
    Complex c = std::cos(two_pi_d);
    const double norm = std::sqrt(std::norm(a) + std::norm(b) + std::norm(c));
    return {a / norm, b / norm, c / norm};
}

TwoModeState with_vacuum_admixture(const TwoModeState& state, double p00) {
    if (p00 < 0 || p00 > 1) throw std::invalid_argument("with_vacuum_admixture: p00 out of range");
    Matrix vac = Matrix::Zero(state.space.dim(), state.space.dim());
    vac(state.space.index({0, 0}), state.space.index({0, 0})) = 1.0;
    return TwoModeState{state.space, p00 * vac + (1.0 - p00) * state.rho};
}

TwoModeState with_qubit_decay(const FockSpace& space, const EmitterConfig& config,
                              const std::vector<int>& active, double p) {
    if (p < 0 || p > 1) throw std::invalid_argument("with_qubit_decay: p out of range");
    const size_t n = active.size();
    QubitPreparation prep(config.positions.size(), QubitAmplitudes::excited());
    Matrix rho = Matrix::Zero(space.dim(), space.dim());
    for (size_t mask = 0; mask < (size_t(1) << n); ++mask) {
        std::vector<int> survivors;
        for (size_t i = 0; i < n; ++i)
            if (mask & (size_t(1) << i)) survivors.push_back(active[i]);
        const double prob = std::pow(1.0 - p, survivors.size()) * std::pow(p, n - survivors.size());
        if (prob == 0) continue;
        rho += prob * emitted_state(space, config, prep, survivors).rho;
    }
    return TwoModeState{space, rho};
}

}  // namespace wqed
