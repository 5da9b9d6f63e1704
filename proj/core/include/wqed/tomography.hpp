#ifndef WQED_TOMOGRAPHY_HPP
#define WQED_TOMOGRAPHY_HPP

#include "wqed/fock.hpp"
#include "wqed/moments.hpp"

namespace wqed {

enum class MLEWeighting { Uniform, InverseVariance };

struct MLEConfig {
    int cutoff = 3;          // Fock truncation per mode for the reconstruction
    int max_iters = 60000;
    double convergence_tol = 1e-2;  // plateau threshold: relative cost drop per 250-iteration window
    MLEWeighting weighting = MLEWeighting::InverseVariance;
    int n_restarts = 8;
    uint64_t seed = 0;

    void check() const;
};

struct MLEResult {
    DensityMatrix rho;
    double residual = 0;       // weighted squared moment mismatch at the optimum
    double error_floor = 0;    // weighted squared error budget of the input moments
    int best_restart = -1;
};

// Density-matrix reconstruction from inverted signal moments: rho is
// parametrized as T^dag T / Tr(T^dag T) with lower-triangular T (positivity
// and unit trace by construction) and fitted to all moment operators up to
// the table order by weighted least squares with random restarts.
MLEResult mle_density_matrix(const MomentTable& moments, const MLEConfig& cfg);

struct NoiseFitResult {
    double n_noise = 0;
    double eta = 1.0;
    double residual = 0;
};

// Thermal-model fit of one side's noise moments: diagonal entries obey
// <h^n h^dag^n> = n! (n_noise + 1)^n; scalar least squares over n_noise.
NoiseFitResult fit_noise_thermal(const MomentTable& noise, Side side);

}  // namespace wqed

#endif
