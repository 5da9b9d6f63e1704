#include "wqed/spectroscopy.hpp"

#include <cmath>
#include <fstream>
#include <random>

namespace wqed {

namespace {
constexpr double kHbar = 1.054571817e-34;  // J s
constexpr double kBoltzmann = 1.380649e-23;  // J/K
}  // namespace

void SpectroscopyParams::check() const {
    if (gamma <= 0) throw std::invalid_argument("SpectroscopyParams: gamma must be > 0");
    if (gamma_phi < 0 || n_th < 0)
        throw std::invalid_argument("SpectroscopyParams: rates must be >= 0");
    if (omega <= 0) throw std::invalid_argument("SpectroscopyParams: omega must be > 0");
}

double dbm_to_watts(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }
double watts_to_dbm(double watts) { return 10.0 * std::log10(watts / 1e-3); }

double probe_rabi(const SpectroscopyParams& p, double power_watts) {
    return std::sqrt(2.0 * p.gamma * power_watts / (kHbar * p.omega));
}

Complex s21_model(const SpectroscopyParams& p, double delta_omega, double power_watts) {
    p.check();
    if (power_watts < 0) throw std::invalid_argument("s21_model: power must be >= 0");
    const double g2 = p.gamma2();
    const double om = probe_rabi(p, power_watts);
    const double d = delta_omega / g2;
    const double sat = om * om / ((1.0 + 2.0 * p.n_th) * p.gamma * g2);
    const Complex num = p.gamma * Complex(1.0, -d);
    const double den = 2.0 * g2 * (1.0 + 2.0 * p.n_th) * (1.0 + d * d + sat);
    return 1.0 - num / den;
}

S21Dataset synth_dataset(const SpectroscopyParams& p, const std::vector<double>& detunings,
                         const std::vector<double>& powers, double noise_sigma, uint64_t seed) {
    if (noise_sigma < 0) throw std::invalid_argument("synth_dataset: noise_sigma must be >= 0");
    for (size_t i = 1; i < detunings.size(); ++i)
        if (!(detunings[i] > detunings[i - 1]))
            throw std::invalid_argument("synth_dataset: detuning grid must be monotone");
    for (size_t i = 1; i < powers.size(); ++i)
        if (!(powers[i] > powers[i - 1]))
            throw std::invalid_argument("synth_dataset: power grid must be monotone");

    S21Dataset data;
    data.detunings = detunings;
    data.powers = powers;
    data.omega = p.omega;
    data.values.resize(detunings.size(), powers.size());
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, noise_sigma);
    for (size_t i = 0; i < detunings.size(); ++i)
        for (size_t j = 0; j < powers.size(); ++j) {
            Complex v = s21_model(p, detunings[i], powers[j]);
            if (noise_sigma > 0) v += Complex(gauss(rng), gauss(rng));
            data.values(i, j) = v;
        }
    return data;
}

void S21Dataset::save_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("S21Dataset::save_csv: cannot open " + path);
    out.precision(12);
    out << "delta_omega_hz,power_dbm,re_s21,im_s21\n";
    for (size_t i = 0; i < detunings.size(); ++i)
        for (size_t j = 0; j < powers.size(); ++j)
            out << detunings[i] / (2.0 * M_PI) << "," << watts_to_dbm(powers[j]) << ","
                << values(i, j).real() << "," << values(i, j).imag() << "\n";
}

S21FitResult fit_s21(const S21Dataset& data, const SpectroscopyParams& initial_guess) {
    initial_guess.check();
    if (data.detunings.size() < 3 || data.powers.size() < 3)
        throw std::invalid_argument("fit_s21: grid too small");
    {
        SpectroscopyParams probe = initial_guess;
        probe.omega = data.omega;
        if (probe_rabi(probe, data.powers.back()) < probe.gamma)
            throw std::invalid_argument(
                "fit_s21: data does not reach saturation, gamma and n_th are degenerate");
    }

    const size_t n_pts = data.detunings.size() * data.powers.size();
    const size_t n_res = 2 * n_pts;

    auto unpack = [&data](const Eigen::Vector3d& logp) {
        SpectroscopyParams p;
        p.gamma = std::exp(logp(0));
        p.gamma_phi = std::exp(logp(1));
        p.n_th = std::exp(logp(2));
        p.omega = data.omega;
        return p;
    };
    auto residuals = [&](const Eigen::Vector3d& logp, Eigen::VectorXd& r) {
        const SpectroscopyParams p = unpack(logp);
        size_t k = 0;
        for (size_t i = 0; i < data.detunings.size(); ++i)
            for (size_t j = 0; j < data.powers.size(); ++j) {
                const Complex m = s21_model(p, data.detunings[i], data.powers[j]);
                const Complex d = m - data.values(i, j);
                r(k++) = d.real();
                r(k++) = d.imag();
            }
    };

    Eigen::Vector3d logp(std::log(initial_guess.gamma),
                         std::log(std::max(initial_guess.gamma_phi, 1e-6 * initial_guess.gamma)),
                         std::log(std::max(initial_guess.n_th, 1e-6)));
    Eigen::VectorXd r(n_res), r_trial(n_res);
    residuals(logp, r);
    double cost = r.squaredNorm();

    double lambda = 1e-3;
    int iters = 0;
    bool converged = false;
    Eigen::MatrixXd jac(n_res, 3);
    for (; iters < 200 && !converged; ++iters) {
        // central-difference Jacobian in log space
        for (int c = 0; c < 3; ++c) {
            const double h = 1e-6;
            Eigen::Vector3d lp = logp, lm = logp;
            lp(c) += h;
            lm(c) -= h;
            Eigen::VectorXd rp(n_res), rm(n_res);
            residuals(lp, rp);
            residuals(lm, rm);
            jac.col(c) = (rp - rm) / (2.0 * h);
        }
        const Eigen::Matrix3d jtj = jac.transpose() * jac;
        const Eigen::Vector3d jtr = jac.transpose() * r;
        if (jtr.norm() < 1e-14 * (1.0 + std::sqrt(cost))) {
            converged = true;
            break;
        }

        bool stepped = false;
        for (int attempt = 0; attempt < 40; ++attempt) {
            Eigen::Matrix3d damped = jtj + lambda * Eigen::Matrix3d(jtj.diagonal().asDiagonal());
            const Eigen::Vector3d step = damped.ldlt().solve(jtr);
            const Eigen::Vector3d trial = logp - step;
            residuals(trial, r_trial);
            const double trial_cost = r_trial.squaredNorm();
            if (trial_cost < cost) {
                const double improvement = cost - trial_cost;
                logp = trial;
                r = r_trial;
                cost = trial_cost;
                lambda = std::max(lambda * 0.3, 1e-12);
                stepped = true;
                if (improvement < 1e-15 * (1.0 + cost)) converged = true;
                break;
            }
            lambda *= 8.0;
        }
        if (!stepped) converged = true;  // no descent direction improves further
    }
    if (!converged)
        throw std::runtime_error("fit_s21: damped Gauss-Newton failed to converge");

    S21FitResult result;
    result.params = unpack(logp);
    result.residual_norm = std::sqrt(cost);
    result.iterations = iters;

    // Approximate covariance of the physical parameters via the chain rule
    // from the log-parameter Gauss-Newton Hessian.
    const double dof = std::max<double>(1.0, double(n_res) - 3.0);
    const double sigma2 = cost / dof;
    const Eigen::Matrix3d jtj = jac.transpose() * jac;
    Eigen::Matrix3d cond = jtj;
    Eigen::FullPivLU<Eigen::Matrix3d> lu(cond);
    if (!lu.isInvertible())
        throw std::runtime_error("fit_s21: ill-conditioned Jacobian, insufficient power range");
    Eigen::Matrix3d cov_log = sigma2 * lu.inverse();
    Eigen::Vector3d scale(result.params.gamma, result.params.gamma_phi, result.params.n_th);
    result.covariance = scale.asDiagonal() * cov_log * scale.asDiagonal();
    return result;
}

double thermal_occupation_to_temperature(double n_th, double omega) {
    if (n_th <= 0)
        throw std::invalid_argument("thermal_occupation_to_temperature: undefined for n_th <= 0");
    if (omega <= 0) throw std::invalid_argument("thermal_occupation_to_temperature: omega must be > 0");
    return kHbar * omega / (kBoltzmann * std::log1p(1.0 / n_th));
}

double temperature_to_thermal_occupation(double temperature, double omega) {
    if (temperature <= 0 || omega <= 0)
        throw std::invalid_argument("temperature_to_thermal_occupation: bad arguments");
    return 1.0 / std::expm1(kHbar * omega / (kBoltzmann * temperature));
}

}  // namespace wqed
