#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <wqed/emission.hpp>

using namespace wqed;

namespace {

EmitterConfig two_emitters(double dx_over_lambda) {
    EmitterConfig c;
    c.omega = 2.0 * M_PI * 4.85e9;
    c.v = 1.2e8;
    c.gamma = 2.0 * M_PI * 0.53e6;
    c.positions = {0.0, dx_over_lambda * c.wavelength()};
    return c;
}

Complex amp(const TwoModeState& st, const Vector& psi) {
    return (psi.adjoint() * st.rho * psi)(0, 0);
}

Vector basis_vector(const FockSpace& sp, std::vector<int> occ) {
    Vector v = Vector::Zero(sp.dim());
    v(sp.index(occ)) = 1.0;
    return v;
}

}  // namespace

TEST_CASE("emitted_state: 3/4-wavelength spacing gives the two-photon N00N state") {
    FockSpace sp(4, 2);
    EmitterConfig cfg = two_emitters(0.75);
    QubitPreparation prep(2, QubitAmplitudes::excited());
    TwoModeState st = emitted_state(sp, cfg, prep, {0, 1});

    Vector noon = (basis_vector(sp, {2, 0}) - basis_vector(sp, {0, 2})) / std::sqrt(2.0);
    CHECK(std::abs(amp(st, noon) - Complex(1.0)) < 1e-12);
}

TEST_CASE("emitted_state: half-wavelength spacing gives the partition state") {
    FockSpace sp(4, 2);
    EmitterConfig cfg = two_emitters(0.5);
    QubitPreparation prep(2, QubitAmplitudes::excited());
    TwoModeState st = emitted_state(sp, cfg, prep, {0, 1});

    Vector part = 0.5 * basis_vector(sp, {2, 0}) + 0.5 * basis_vector(sp, {0, 2}) +
                  basis_vector(sp, {1, 1}) / std::sqrt(2.0);
    CHECK(std::abs(amp(st, part) - Complex(1.0)) < 1e-12);
}

TEST_CASE("emitted_state: single-qubit equal superposition calibration state") {
    FockSpace sp(4, 2);
    EmitterConfig cfg = two_emitters(0.75);
    const double r = 1.0 / std::sqrt(2.0);
    TwoModeState st = emitted_state(sp, cfg, {QubitAmplitudes{r, r}}, {0});

    Vector target = basis_vector(sp, {0, 0}) / std::sqrt(2.0) +
                    0.5 * (basis_vector(sp, {1, 0}) + basis_vector(sp, {0, 1}));
    CHECK(std::abs(amp(st, target) - Complex(1.0)) < 1e-12);
    // the defining first/second-moment relation |<a>| = sqrt(2) <a+a>
    DensityMatrix rho = st.as_density_matrix();
    const double m1 = std::abs(expect_moment(rho, {0, 1, 0, 0}));
    const double m2 = expect_moment(rho, {1, 1, 0, 0}).real();
    CHECK(m1 == doctest::Approx(std::sqrt(2.0) * m2).epsilon(1e-12));
}

TEST_CASE("emitted_state: zero spacing equals half-wavelength up to global phase") {
    FockSpace sp(4, 2);
    QubitPreparation prep(2, QubitAmplitudes::excited());
    TwoModeState zero = emitted_state(sp, two_emitters(1e-12), prep, {0, 1});
    TwoModeState half = emitted_state(sp, two_emitters(0.5), prep, {0, 1});
    // density matrices are phase-free
    CHECK((zero.rho - half.rho).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("emitted_state: error conditions") {
    FockSpace sp(2, 2);
    EmitterConfig cfg = two_emitters(0.75);
    // partially excited multi-qubit preparations are rejected
    const double r = 1.0 / std::sqrt(2.0);
    QubitPreparation partial = {QubitAmplitudes{r, r}, QubitAmplitudes::excited()};
    CHECK_THROWS_AS(emitted_state(sp, cfg, partial, {0, 1}), std::invalid_argument);
    // non-normalized amplitudes
    QubitPreparation bad = {QubitAmplitudes{0.9, 0.9}};
    CHECK_THROWS_AS(emitted_state(sp, cfg, bad, {0}), std::invalid_argument);
}

TEST_CASE("noon_coefficients: canonical spacings") {
    // d = 0.75: no |11> component, equal moduli, relative phase pi
    auto [a, b, c] = noon_coefficients(0.75);
    CHECK(std::abs(c) < 1e-12);
    CHECK(std::abs(a) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(std::abs(b) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(std::abs(a / b + 1.0) < 1e-12);  // relative phase pi

    // d = 0.5: (a,b,c) proportional to (1/2, 1/2, 1/sqrt(2))
    auto [a2, b2, c2] = noon_coefficients(0.5);
    CHECK(std::abs(a2 / c2 - 0.5 / (1.0 / std::sqrt(2.0))) < 1e-12);
    CHECK(std::abs(a2 - b2) < 1e-12);

    // d = 0.25 is again maximally path-entangled
    auto quarter = noon_coefficients(0.25);
    CHECK(std::abs(quarter[2]) < 1e-12);
}

TEST_CASE("noon_coefficients: normalized, match emitted_state on a 64-point grid") {
    FockSpace sp(4, 2);
    QubitPreparation prep(2, QubitAmplitudes::excited());
    for (int k = 0; k < 64; ++k) {
        const double d = k / 64.0;
        auto [a, b, c] = noon_coefficients(d);
        CHECK(std::abs(std::norm(a) + std::norm(b) + std::norm(c) - 1.0) < 1e-12);

        EmitterConfig cfg = two_emitters(d == 0 ? 1e-15 : d);
        TwoModeState st = emitted_state(sp, cfg, prep, {0, 1});
        Vector psi = a * basis_vector(sp, {2, 0}) + b * basis_vector(sp, {0, 2}) +
                     c * basis_vector(sp, {1, 1});
        CHECK(std::abs(amp(st, psi) - Complex(1.0)) < 1e-10);
    }
}

TEST_CASE("noon_coefficients: |c|^2 extremal exactly at quarter- and half-wave points") {
    double min_c = 1e9, max_c = -1;
    double argmin = -1, argmax = -1;
    for (int k = 0; k <= 1000; ++k) {
        const double d = k / 1000.0;
        const double c2 = std::norm(noon_coefficients(d)[2]);
        if (c2 < min_c) { min_c = c2; argmin = d; }
        if (c2 > max_c) { max_c = c2; argmax = d; }
    }
    CHECK(std::norm(noon_coefficients(0.25)[2]) < 1e-12);
    CHECK(std::norm(noon_coefficients(0.75)[2]) < 1e-12);
    CHECK(min_c < 1e-12);
    CHECK((std::abs(argmin - 0.25) < 1e-9 || std::abs(argmin - 0.75) < 1e-9));
    CHECK((std::abs(argmax - 0.0) < 1e-9 || std::abs(argmax - 0.5) < 1e-9 ||
           std::abs(argmax - 1.0) < 1e-9));
}

TEST_CASE("emitted_state: normalized, photon number equals excitation count") {
    FockSpace sp(4, 2);
    QubitPreparation prep(2, QubitAmplitudes::excited());
    TwoModeState st = emitted_state(sp, two_emitters(0.37), prep, {0, 1});
    DensityMatrix rho = st.as_density_matrix();
    rho.validate();
    const double total =
        expect_moment(rho, {1, 1, 0, 0}).real() + expect_moment(rho, {0, 0, 1, 1}).real();
    CHECK(total == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("position shift leaves all normally ordered moduli invariant") {
    FockSpace sp(4, 2);
    QubitPreparation prep(2, QubitAmplitudes::excited());
    EmitterConfig base = two_emitters(0.75);
    EmitterConfig shifted = base;
    const double s = 0.31 * base.wavelength();
    for (auto& x : shifted.positions) x += s;

    DensityMatrix r0 = emitted_state(sp, base, prep, {0, 1}).as_density_matrix();
    DensityMatrix r1 = emitted_state(sp, shifted, prep, {0, 1}).as_density_matrix();
    const MomentPowers ps[] = {{1, 1, 0, 0}, {0, 0, 1, 1}, {2, 2, 0, 0},
                               {1, 1, 1, 1}, {0, 2, 2, 0}, {1, 0, 0, 1}};
    for (const auto& p : ps)
        CHECK(std::abs(expect_moment(r0, p)) ==
              doctest::Approx(std::abs(expect_moment(r1, p))).epsilon(1e-10));

    // a shift by a whole wavelength leaves even the phases unchanged
    EmitterConfig period = base;
    for (auto& x : period.positions) x += base.wavelength();
    DensityMatrix r2 = emitted_state(sp, period, prep, {0, 1}).as_density_matrix();
    for (const auto& p : ps)
        CHECK(std::abs(expect_moment(r0, p) - expect_moment(r2, p)) < 1e-9);
}

TEST_CASE("with_vacuum_admixture: populations, trace, monotone fidelity") {
    FockSpace sp(4, 2);
    QubitPreparation prep(2, QubitAmplitudes::excited());
    TwoModeState noon = emitted_state(sp, two_emitters(0.75), prep, {0, 1});
    DensityMatrix target = noon.as_density_matrix();

    // p00 = 0 is the identity map
    CHECK((with_vacuum_admixture(noon, 0.0).rho - noon.rho).cwiseAbs().maxCoeff() == 0.0);

    TwoModeState mixed = with_vacuum_admixture(noon, 0.09);
    DensityMatrix rho = mixed.as_density_matrix();
    rho.validate();
    CHECK(rho.entries()(sp.index({0, 0}), sp.index({0, 0})).real() ==
          doctest::Approx(0.09).epsilon(1e-12));
    CHECK(fidelity(rho, target) == doctest::Approx(0.91).epsilon(1e-12));

    double prev = 1.0;
    for (double p : {0.0, 0.05, 0.1, 0.2}) {
        const double f =
            fidelity(with_vacuum_admixture(noon, p).as_density_matrix(), target);
        CHECK(f <= prev + 1e-12);
        prev = f;
    }
    CHECK_THROWS_AS(with_vacuum_admixture(noon, 1.5), std::invalid_argument);
}

TEST_CASE("with_qubit_decay: independent collapse gives p00 = p^2") {
    FockSpace sp(4, 2);
    EmitterConfig cfg = two_emitters(0.75);
    TwoModeState st = with_qubit_decay(sp, cfg, {0, 1}, 0.3);
    DensityMatrix rho = st.as_density_matrix();
    rho.validate();
    CHECK(rho.entries()(sp.index({0, 0}), sp.index({0, 0})).real() ==
          doctest::Approx(0.09).epsilon(1e-12));
}
