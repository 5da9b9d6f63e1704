#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unsupported/Eigen/MatrixFunctions>
#include <wqed/dynamics.hpp>
#include <wqed/emission.hpp>

using namespace wqed;

namespace {

EmitterConfig one_emitter() {
    EmitterConfig c;
    c.omega = 2.0 * M_PI * 4.85e9;
    c.v = 1.2e8;
    c.gamma = 2.0 * M_PI * 0.53e6;
    c.positions = {0.0};
    return c;
}

EmitterConfig two_emitters(double dx_over_lambda) {
    EmitterConfig c = one_emitter();
    c.positions = {0.0, dx_over_lambda * c.wavelength()};
    return c;
}

// Independent brute-force propagator: vectorize the Lindblad generator into a
// d^2 x d^2 superoperator matrix and apply its exponential.
Matrix superoperator_matrix(const LindbladGenerator& gen) {
    const int d = gen.dim();
    Matrix sup = Matrix::Zero(d * d, d * d);
    for (int j = 0; j < d; ++j)
        for (int i = 0; i < d; ++i) {
            Matrix basis = Matrix::Zero(d, d);
            basis(i, j) = 1.0;
            Matrix image = gen.apply(basis);
            for (int l = 0; l < d; ++l)
                for (int k = 0; k < d; ++k) sup(l * d + k, j * d + i) = image(k, l);
        }
    return sup;
}

Matrix expm_evolve(const LindbladGenerator& gen, const Matrix& rho0, double t) {
    const int d = gen.dim();
    Matrix sup = superoperator_matrix(gen);
    Vector vec(d * d);
    for (int j = 0; j < d; ++j)
        for (int i = 0; i < d; ++i) vec(j * d + i) = rho0(i, j);
    Vector out = (sup * t).exp() * vec;
    Matrix rho(d, d);
    for (int j = 0; j < d; ++j)
        for (int i = 0; i < d; ++i) rho(i, j) = out(j * d + i);
    return rho;
}

double excited_population(const Matrix& rho, int n_qubits) {
    double total = 0;
    for (int q = 0; q < n_qubits; ++q) {
        Matrix sm = qubit_lowering(n_qubits, q);
        total += (sm.adjoint() * sm * rho).trace().real();
    }
    return total;
}

std::vector<double> grid(double t_max, int n) {
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) g[i] = t_max * double(i) / double(n - 1);
    return g;
}

}  // namespace

TEST_CASE("build_generator: single emitter channels") {
    EmitterConfig cfg = one_emitter();
    cfg.n_th = 0.006;
    cfg.gamma_phi = 2.0 * M_PI * 51e3;
    LindbladGenerator gen = build_generator(cfg);
    REQUIRE(gen.dissipators.size() == 3);

    // lowering at (1+n_th) gamma, raising at n_th gamma, sigma_z at gamma_phi/2
    Matrix sm = qubit_lowering(1, 0);
    double rate_down = 0, rate_up = 0, rate_z = 0;
    for (const auto& [jump, rate] : gen.dissipators) {
        if ((jump.cwiseAbs() - sm.cwiseAbs()).cwiseAbs().maxCoeff() < 1e-12 &&
            std::abs(jump(0, 1)) > 0.5)
            rate_down = rate;
        else if (std::abs(jump(1, 0)) > 0.5)
            rate_up = rate;
        else
            rate_z = rate;
    }
    CHECK(rate_down == doctest::Approx((1.0 + cfg.n_th) * cfg.gamma).epsilon(1e-12));
    CHECK(rate_up == doctest::Approx(cfg.n_th * cfg.gamma).epsilon(1e-12));
    CHECK(rate_z == doctest::Approx(0.5 * cfg.gamma_phi).epsilon(1e-12));
}

TEST_CASE("build_generator: collective rates at the canonical spacings") {
    // half-wavelength: bright/dark channels with rates {2 gamma, 0}
    EmitterConfig half = two_emitters(0.5);
    LindbladGenerator bright = build_generator(half);
    REQUIRE(bright.dissipators.size() == 1);  // the dark channel is dropped
    CHECK(bright.dissipators[0].second == doctest::Approx(2.0 * half.gamma).epsilon(1e-9));
    // no exchange coupling: sin(pi) = 0
    CHECK(bright.hamiltonian.cwiseAbs().maxCoeff() < 1e-9 * half.gamma);

    // three-quarter wavelength: independent decay, exchange -gamma/2
    EmitterConfig tq = two_emitters(0.75);
    LindbladGenerator indep = build_generator(tq);
    REQUIRE(indep.dissipators.size() == 2);
    for (const auto& [jump, rate] : indep.dissipators)
        CHECK(rate == doctest::Approx(tq.gamma).epsilon(1e-9));
    // <eg| H |ge> = J = -gamma/2  (basis |q0 q1>, second qubit fastest)
    CHECK(indep.hamiltonian(2, 1).real() == doctest::Approx(-0.5 * tq.gamma).epsilon(1e-9));
}

TEST_CASE("build_generator: drive restricted to one qubit") {
    EmitterConfig cfg = two_emitters(0.5);
    CHECK_THROWS_AS(build_generator(cfg, DriveParams{1e5, 0.0}), std::invalid_argument);
    LindbladGenerator gen = build_generator(one_emitter(), DriveParams{2e5, 3e5});
    // H = (dw/2) sigma_z + (Omega/2) sigma_x
    CHECK(gen.hamiltonian(0, 1).real() == doctest::Approx(1e5).epsilon(1e-12));
    CHECK(std::abs(gen.hamiltonian(0, 0) - gen.hamiltonian(1, 1)) ==
          doctest::Approx(3e5).epsilon(1e-12));
}

TEST_CASE("evolve: single-emitter exponential decay") {
    EmitterConfig cfg = one_emitter();
    LindbladGenerator gen = build_generator(cfg);
    Trajectory traj = evolve(all_excited(1), gen, grid(3.0 / cfg.gamma, 31));
    for (size_t i = 0; i < traj.times.size(); ++i) {
        const double expected = std::exp(-cfg.gamma * traj.times[i]);
        CHECK(std::abs(excited_population(traj.states[i], 1) - expected) < 1e-6);
    }
    CHECK(traj.max_trace_drift < 1e-8);
}

TEST_CASE("evolve: independent decay at three-quarter-wavelength spacing") {
    EmitterConfig cfg = two_emitters(0.75);
    LindbladGenerator gen = build_generator(cfg);
    Trajectory traj = evolve(all_excited(2), gen, grid(6.0 / cfg.gamma, 61));
    for (size_t i = 0; i < traj.times.size(); ++i) {
        const double expected = 2.0 * std::exp(-cfg.gamma * traj.times[i]);
        CHECK(std::abs(excited_population(traj.states[i], 2) - expected) < 1e-6);
    }
}

TEST_CASE("evolve: matches matrix-exponential oracle for all two-qubit configs") {
    for (double d : {0.5, 0.75, 0.31}) {
        EmitterConfig cfg = two_emitters(d);
        cfg.n_th = 0.006;
        cfg.gamma_phi = 2.0 * M_PI * 51e3;
        LindbladGenerator gen = build_generator(cfg);
        std::vector<double> ts = grid(5.0 / cfg.gamma, 6);
        Trajectory traj = evolve(all_excited(2), gen, ts);
        for (size_t i = 0; i < ts.size(); ++i) {
            Matrix oracle = expm_evolve(gen, all_excited(2), ts[i]);
            CHECK((traj.states[i] - oracle).cwiseAbs().maxCoeff() < 1e-8);
        }
    }
}

TEST_CASE("evolve: positivity and trace along the trajectory") {
    EmitterConfig cfg = two_emitters(0.5);
    LindbladGenerator gen = build_generator(cfg);
    Trajectory traj = evolve(all_excited(2), gen, grid(10.0 / cfg.gamma, 41));
    for (const Matrix& rho : traj.states) {
        CHECK(std::abs(rho.trace().real() - 1.0) < 1e-8);
        Eigen::SelfAdjointEigenSolver<Matrix> es(rho);
        CHECK(es.eigenvalues().minCoeff() > -1e-8);
    }
}

TEST_CASE("evolve: input validation") {
    LindbladGenerator gen = build_generator(one_emitter());
    CHECK_THROWS_AS(evolve(all_excited(1), gen, {}), std::invalid_argument);
    CHECK_THROWS_AS(evolve(all_excited(1), gen, {0.0, 1e-6, 0.5e-6}), std::invalid_argument);
}

TEST_CASE("output_flux: single emitter and left-right symmetry") {
    EmitterConfig cfg = one_emitter();
    LindbladGenerator gen = build_generator(cfg);
    Trajectory traj = evolve(all_excited(1), gen, grid(5.0 / cfg.gamma, 41));
    std::vector<double> fl = output_flux(traj, cfg, Direction::Left);
    for (size_t i = 0; i < traj.times.size(); ++i)
        CHECK(fl[i] == doctest::Approx(0.5 * cfg.gamma * std::exp(-cfg.gamma * traj.times[i]))
                           .epsilon(1e-6));

    // two emitters at 3/4 wavelength: initial left flux gamma (cross terms vanish)
    EmitterConfig tq = two_emitters(0.75);
    Trajectory traj2 = evolve(all_excited(2), build_generator(tq), grid(5.0 / tq.gamma, 41));
    CHECK(output_flux(traj2, tq, Direction::Left)[0] ==
          doctest::Approx(tq.gamma).epsilon(1e-9));

    // half wavelength: flux_L(t) = flux_R(t) for all t
    EmitterConfig half = two_emitters(0.5);
    Trajectory traj3 = evolve(all_excited(2), build_generator(half), grid(5.0 / half.gamma, 41));
    std::vector<double> l = output_flux(traj3, half, Direction::Left);
    std::vector<double> r = output_flux(traj3, half, Direction::Right);
    for (size_t i = 0; i < l.size(); ++i) CHECK(std::abs(l[i] - r[i]) < 1e-9 * half.gamma);
}

TEST_CASE("integrated_photon_number: unity per direction for both spacings") {
    for (double d : {0.5, 0.75}) {
        EmitterConfig cfg = two_emitters(d);
        LindbladGenerator gen = build_generator(cfg);
        Trajectory traj = evolve(all_excited(2), gen, grid(10.0 / cfg.gamma, 801));
        const double nl = integrated_photon_number(traj, cfg, Direction::Left);
        const double nr = integrated_photon_number(traj, cfg, Direction::Right);
        CHECK(std::abs(nl - 1.0) < 2e-3);
        CHECK(std::abs(nr - 1.0) < 2e-3);
        CHECK(std::abs(nl + nr - 2.0) < 2e-3);  // photon-number conservation
    }
}

TEST_CASE("integrated_photon_number: half photon per side from one emitter, dephasing-proof") {
    EmitterConfig cfg = one_emitter();
    cfg.gamma_phi = 2.0 * M_PI * 51e3;  // dephasing does not destroy excitations
    LindbladGenerator gen = build_generator(cfg);
    Trajectory traj = evolve(all_excited(1), gen, grid(10.0 / cfg.gamma, 801));
    CHECK(std::abs(integrated_photon_number(traj, cfg, Direction::Left) - 0.5) < 2e-3);
    CHECK(std::abs(integrated_photon_number(traj, cfg, Direction::Right) - 0.5) < 2e-3);

    // horizon shorter than 8/gamma is rejected
    Trajectory shorttraj = evolve(all_excited(1), gen, grid(4.0 / cfg.gamma, 41));
    CHECK_THROWS_AS(integrated_photon_number(shorttraj, cfg, Direction::Left),
                    std::invalid_argument);
}

TEST_CASE("two_time_g1: analytic single-emitter correlator and flux limit") {
    EmitterConfig cfg = one_emitter();
    LindbladGenerator gen = build_generator(cfg);
    const double t = 0.4 / cfg.gamma, tau = 0.7 / cfg.gamma;
    Complex g1 = two_time_g1(gen, all_excited(1), cfg, Direction::Left, t, tau);
    const double expected = 0.5 * cfg.gamma * std::exp(-cfg.gamma * t) *
                            std::exp(-0.5 * cfg.gamma * tau);
    CHECK(std::abs(g1 - Complex(expected)) < 1e-6 * cfg.gamma);

    // tau = 0 reduces to the flux
    Trajectory traj = evolve(all_excited(1), gen, {0.0, t});
    Complex g0 = two_time_g1(gen, all_excited(1), cfg, Direction::Left, t, 0.0);
    CHECK(std::abs(g0.real() - output_flux(traj, cfg, Direction::Left)[1]) < 1e-8 * cfg.gamma);
}

TEST_CASE("two_time_g1: emitter pair against the matrix-exponential regression oracle") {
    // the exchange coupling J = -gamma/2 at this spacing acts in the
    // single-excitation sector reached after the first jump, so the pair
    // correlator is not a sum of independent emitters; validate it against
    // brute-force regression instead
    EmitterConfig pair = two_emitters(0.75);
    LindbladGenerator gen = build_generator(pair);
    const Matrix a_op = output_mode_operator(pair, Direction::Left);
    for (double t : {0.2 / pair.gamma, 0.8 / pair.gamma}) {
        for (double tau : {0.0, 0.5 / pair.gamma, 1.4 / pair.gamma}) {
            const Matrix rho_t = expm_evolve(gen, all_excited(2), t);
            const Matrix propagated = expm_evolve(gen, a_op * rho_t, tau);
            const Complex oracle = (a_op.adjoint() * propagated).trace();
            const Complex got = two_time_g1(gen, all_excited(2), pair, Direction::Left, t, tau);
            CHECK(std::abs(got - oracle) < 1e-6 * pair.gamma);
        }
    }
}

TEST_CASE("cross_coincidence_g2: canonical spacings against the static state oracle") {
    // the ideal emitted state is derived for free collective decay; the
    // waveguide-mediated exchange term is neglected there (it vanishes at
    // half-wavelength spacing and is dropped for fully excited emitters),
    // so the consistency check evolves without it to compare like with like
    FockSpace sp(4, 2);
    QubitPreparation prep(2, QubitAmplitudes::excited());
    for (double d : {0.75, 0.5}) {
        EmitterConfig cfg = two_emitters(d);
        LindbladGenerator gen = build_generator(cfg);
        gen.hamiltonian.setZero();
        const double g2 = cross_coincidence_g2(gen, all_excited(2), cfg, 8.0 / cfg.gamma, 200);
        const double oracle =
            expect_moment(emitted_state(sp, cfg, prep, {0, 1}).as_density_matrix(),
                          {1, 1, 1, 1})
                .real();
        CHECK(std::abs(g2 - oracle) < 5e-3);
        CHECK(std::abs(oracle - (d == 0.75 ? 0.0 : 0.5)) < 1e-12);
    }
}

TEST_CASE("cross_coincidence_g2: exchange coupling opens the cross port at 3/4 wavelength") {
    // with the exchange term J = -gamma/2 kept, the two-photon amplitude for
    // one photon per direction is proportional to sin(J tau) between the
    // emissions; integrating |psi_LR|^2 + |psi_RL|^2 gives exactly
    // 2 * gamma^2 * (1/(2 gamma)) * Int_0^inf e^{-gamma tau} sin^2(gamma tau/2) dtau = 1/4
    EmitterConfig cfg = two_emitters(0.75);
    LindbladGenerator gen = build_generator(cfg);
    const double g2 = cross_coincidence_g2(gen, all_excited(2), cfg, 8.0 / cfg.gamma, 200);
    CHECK(std::abs(g2 - 0.25) < 5e-3);
}

TEST_CASE("cross_coincidence_g2: a single photon never coincides") {
    EmitterConfig cfg = one_emitter();
    LindbladGenerator gen = build_generator(cfg);
    CHECK(std::abs(cross_coincidence_g2(gen, all_excited(1), cfg, 8.0 / cfg.gamma, 100)) < 1e-9);
}
