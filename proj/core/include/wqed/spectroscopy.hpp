#ifndef WQED_SPECTROSCOPY_HPP
#define WQED_SPECTROSCOPY_HPP

#include <string>
#include <vector>

#include "wqed/fock.hpp"

namespace wqed {

struct SpectroscopyParams {
    double gamma = 0;      // rad/s
    double gamma_phi = 0;  // rad/s
    double n_th = 0;
    double omega = 0;      // rad/s, qubit frequency

    double gamma2() const { return (1.0 + 2.0 * n_th) * gamma / 2.0 + gamma_phi; }
    void check() const;
};

struct S21Dataset {
    std::vector<double> detunings;    // rad/s
    std::vector<double> powers;       // watts
    Matrix values;                    // detunings x powers
    double omega = 0;                 // qubit frequency used for Omega_p

    void save_csv(const std::string& path) const;
};

struct S21FitResult {
    SpectroscopyParams params;
    double residual_norm = 0;
    Eigen::Matrix3d covariance;  // over (gamma, gamma_phi, n_th)
    int iterations = 0;
};

double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);

// Probe Rabi strength Omega_p = sqrt(2 gamma P / hbar omega).
double probe_rabi(const SpectroscopyParams& p, double power_watts);

// Elastic transmission of a coherent probe past a single waveguide-coupled
// qubit, including saturation and thermal occupation.
Complex s21_model(const SpectroscopyParams& p, double delta_omega, double power_watts);

S21Dataset synth_dataset(const SpectroscopyParams& p, const std::vector<double>& detunings,
                         const std::vector<double>& powers, double noise_sigma, uint64_t seed);

// Joint 2D fit over the full (detuning, power) grid, stacked Re/Im residuals,
// damped Gauss-Newton with log-reparametrized positive parameters.
// Requires the data to reach saturation (max Omega_p >= gamma at the guess).
S21FitResult fit_s21(const S21Dataset& data, const SpectroscopyParams& initial_guess);

// T = hbar omega / (k_B ln(1 + 1/n_th)); n_th = 0 has no defined temperature.
double thermal_occupation_to_temperature(double n_th, double omega);
double temperature_to_thermal_occupation(double temperature, double omega);

}  // namespace wqed

#endif
