#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <wqed/emission.hpp>
#include <wqed/moments.hpp>
#include <wqed/tomography.hpp>

using namespace wqed;

namespace {

Vector basis_vector(const FockSpace& sp, std::vector<int> occ) {
    Vector v = Vector::Zero(sp.dim());
    v(sp.index(occ)) = 1.0;
    return v;
}

DensityMatrix noon_state(const FockSpace& sp) {
    Vector v = (basis_vector(sp, {2, 0}) - basis_vector(sp, {0, 2})) / std::sqrt(2.0);
    return DensityMatrix::from_pure(sp, v);
}

MomentTable oracle_moments(const DensityMatrix& rho, double sigma) {
    MomentIndexing ix(2);
    MomentTable t(2, MomentKind::SignalA);
    for (int i = 0; i < ix.size(); ++i) {
        t.values[i] = expect_moment(rho, ix.powers(i));
        t.stderrs[i] = sigma;
    }
    return t;
}

MomentTable thermal_noise_table(double n_noise_l, double n_noise_r) {
    MomentTable t(2, MomentKind::NoiseH);
    t.values.assign(t.values.size(), 0.0);
    for (int n = 0; n <= 2; ++n)
        for (int k = 0; k <= 2; ++k) {
            double val = 1.0;
            for (int j = 1; j <= n; ++j) val *= j * (n_noise_l + 1.0);
            for (int j = 1; j <= k; ++j) val *= j * (n_noise_r + 1.0);
            t.at({n, n, k, k}) = val;
        }
    return t;
}

}  // namespace

TEST_CASE("mle_density_matrix: exact N00N moments reconstruct with high fidelity") {
    FockSpace sim(4, 2), tomo(3, 2);
    MomentTable moments = oracle_moments(noon_state(sim), 1e-3);
    MLEConfig cfg;
    cfg.seed = 12;
    MLEResult r = mle_density_matrix(moments, cfg);
    CHECK(fidelity(r.rho, noon_state(tomo)) >= 0.999);
    CHECK(r.residual < r.error_floor);
}

TEST_CASE("mle_density_matrix: vacuum-admixed mixture recovers the 0.09 population") {
    FockSpace sim(4, 2), tomo(3, 2);
    Matrix mixed = 0.09 * basis_vector(sim, {0, 0}) * basis_vector(sim, {0, 0}).adjoint() +
                   0.91 * noon_state(sim).entries();
    MomentTable moments = oracle_moments(DensityMatrix(sim, mixed), 1e-3);
    MLEConfig cfg;
    cfg.seed = 4;
    MLEResult r = mle_density_matrix(moments, cfg);
    CHECK(std::abs(r.rho.entries()(0, 0).real() - 0.09) < 0.01);
    CHECK(std::abs(fidelity(r.rho, noon_state(tomo)) - 0.91) < 0.01);
}

TEST_CASE("mle_density_matrix: trivial vacuum moment set") {
    MomentTable vac(2, MomentKind::SignalA);
    vac.values.assign(vac.values.size(), 0.0);
    vac.values[0] = 1.0;
    vac.stderrs.assign(vac.stderrs.size(), 1e-3);
    MLEConfig cfg;
    cfg.seed = 8;
    MLEResult r = mle_density_matrix(vac, cfg);
    CHECK(std::abs(r.rho.entries()(0, 0).real() - 1.0) < 1e-3);
}

TEST_CASE("mle_density_matrix: output is a valid state and matches its input moments") {
    FockSpace sim(4, 2);
    QubitPreparation prep(2, QubitAmplitudes::excited());
    EmitterConfig dev;
    dev.omega = 2.0 * M_PI * 6.45e9;
    dev.v = 1.2e8;
    dev.gamma = 2.0 * M_PI * 0.95e6;
    dev.positions = {0.0, 0.5 * dev.wavelength()};
    DensityMatrix part = emitted_state(sim, dev, prep, {0, 1}).as_density_matrix();

    MomentTable moments = oracle_moments(part, 1e-3);
    MLEConfig cfg;
    cfg.seed = 19;
    MLEResult r = mle_density_matrix(moments, cfg);
    DensityMatrix rho = r.rho;
    rho.validate();

    MomentIndexing ix(2);
    int within = 0;
    for (int i = 0; i < ix.size(); ++i) {
        // evaluate the fit's moments directly; the truncation headroom guard
        // of expect_moment does not apply to a comparison at the fit cutoff
        const Complex fit = (rho.entries() * moment_operator(rho.space(), ix.powers(i))).trace();
        if (std::abs(fit - moments.values[i]) < 3.0 * moments.stderrs[i] + 3e-3) ++within;
    }
    CHECK(within >= 77);  // >= 95% of 81 entries
    CHECK(rho.entries().imag().cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("mle_density_matrix: fidelity decreases monotonically with vacuum admixture") {
    FockSpace sim(4, 2), tomo(3, 2);
    double prev = 1.1;
    for (double p00 : {0.0, 0.05, 0.1, 0.2}) {
        Matrix mixed = p00 * basis_vector(sim, {0, 0}) * basis_vector(sim, {0, 0}).adjoint() +
                       (1.0 - p00) * noon_state(sim).entries();
        MLEConfig cfg;
        cfg.seed = 100 + int(p00 * 100);
        MLEResult r = mle_density_matrix(oracle_moments(DensityMatrix(sim, mixed), 1e-3), cfg);
        const double f = fidelity(r.rho, noon_state(tomo));
        CHECK(f < prev + 1e-3);
        prev = f;
    }
}

TEST_CASE("mle_density_matrix: inconsistent moments trip the residual floor") {
    // second moments say vacuum while fourth moments say two photons: impossible
    MomentTable bad(2, MomentKind::SignalA);
    bad.values.assign(bad.values.size(), 0.0);
    bad.values[0] = 1.0;
    bad.at({2, 2, 0, 0}) = 2.0;
    bad.stderrs.assign(bad.stderrs.size(), 1e-4);
    MLEConfig cfg;
    cfg.seed = 5;
    CHECK_THROWS_AS(mle_density_matrix(bad, cfg), std::runtime_error);
}

TEST_CASE("mle_density_matrix: configuration validation") {
    MomentTable m(2, MomentKind::SignalA);
    MLEConfig cfg;
    cfg.cutoff = 1;
    CHECK_THROWS_AS(mle_density_matrix(m, cfg), std::invalid_argument);
    cfg = MLEConfig{};
    cfg.convergence_tol = 0.0;
    CHECK_THROWS_AS(mle_density_matrix(m, cfg), std::invalid_argument);
}

TEST_CASE("fit_noise_thermal: exact thermal moments return n_noise to 1e-9") {
    for (double n : {8.615, 7.264, 1.0, 0.25}) {
        MomentTable noise = thermal_noise_table(n, 0.5 * n);
        NoiseFitResult left = fit_noise_thermal(noise, Side::Left);
        NoiseFitResult right = fit_noise_thermal(noise, Side::Right);
        CHECK(std::abs(left.n_noise - n) < 1e-9 * (1.0 + n));
        CHECK(std::abs(right.n_noise - 0.5 * n) < 1e-9 * (1.0 + n));
        CHECK(left.eta == doctest::Approx(1.0 / (1.0 + n)).epsilon(1e-9));
    }
}

TEST_CASE("fit_noise_thermal: n_noise = 0 gives unit efficiency") {
    MomentTable noise = thermal_noise_table(0.0, 0.0);
    NoiseFitResult r = fit_noise_thermal(noise, Side::Left);
    CHECK(r.n_noise < 1e-9);
    CHECK(r.eta == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("fit_noise_thermal: data below the vacuum floor is rejected") {
    MomentTable noise = thermal_noise_table(1.0, 1.0);
    noise.at({1, 1, 0, 0}) = 0.2;  // <h h+> < 1 is unphysical for a thermal channel
    CHECK_THROWS_AS(fit_noise_thermal(noise, Side::Left), std::runtime_error);
}
