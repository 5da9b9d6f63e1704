#include <cmath>
#include <cstdlib>
#include <iostream>
#include <random>
#include <string>

#include <CLI11.hpp>

#include "wqed/scenario.hpp"

namespace {

int run_command(const std::string& config_path, std::optional<uint64_t> seed,
                std::optional<size_t> shots, std::optional<std::string> out_dir) {
    wqed::ScenarioConfig cfg = wqed::ScenarioConfig::from_json_file(config_path);
    if (const char* env = std::getenv("WQED_OUTPUT_DIR")) cfg.output_dir = env;
    if (seed) cfg.seed = *seed;
    if (shots) cfg.n_shots = *shots;
    if (out_dir) cfg.output_dir = *out_dir;

    const wqed::RunReport report = wqed::run_scenario(cfg);
    std::cout << "run " << report.data["config_hash"].get<std::string>() << " complete, report at "
              << cfg.output_dir << "/report.json\n";
    return 0;
}

void check(bool ok, const std::string& what) {
    if (!ok) throw std::runtime_error("selftest: " + what);
    std::cout << "ok - " << what << "\n";
}

int selftest() {
    using namespace wqed;

    // ideal-state moment frames for both canonical spacings
    {
        ScenarioConfig noon = ScenarioConfig::defaults_for(Scenario::Noon3L4);
        const FockSpace space(4, 2);
        const QubitPreparation prep(2, QubitAmplitudes::excited());
        const DensityMatrix rho =
            emitted_state(space, noon.device, prep, {0, 1}).as_density_matrix();
        check(std::abs(expect_moment(rho, {2, 2, 0, 0}) - Complex(1.0)) < 1e-12 &&
                  std::abs(expect_moment(rho, {0, 2, 2, 0}) - Complex(-1.0)) < 1e-12 &&
                  std::abs(expect_moment(rho, {1, 1, 1, 1})) < 1e-12,
              "two-photon interference moments at 3/4 wavelength spacing");

        ScenarioConfig half = ScenarioConfig::defaults_for(Scenario::PartitionL2);
        const DensityMatrix rho2 =
            emitted_state(space, half.device, prep, {0, 1}).as_density_matrix();
        check(std::abs(expect_moment(rho2, {2, 2, 0, 0}) - Complex(0.5)) < 1e-12 &&
                  std::abs(expect_moment(rho2, {1, 1, 1, 1}) - Complex(0.5)) < 1e-12,
              "partition moments at half-wavelength spacing");
    }

    // moment-inversion algebra: vacuum noise is the identity map and the
    // compose/invert round trip is exact on random tables
    {
        MomentTable vacuum(2, MomentKind::NoiseH);
        const Matrix h = build_h_matrix(vacuum, 2);
        check(h.isIdentity(1e-12), "vacuum-noise mixing matrix is the identity");

        std::mt19937_64 rng(7);
        std::normal_distribution<double> gauss;
        MomentTable signal(2, MomentKind::SignalA), noise(2, MomentKind::NoiseH);
        for (size_t i = 1; i < signal.values.size(); ++i) {
            signal.values[i] = 0.3 * Complex(gauss(rng), gauss(rng));
            noise.values[i] = 0.3 * Complex(gauss(rng), gauss(rng));
        }
        const MomentTable forward = compose_moments(signal, noise);
        const MomentTable back = invert_moments(forward, build_h_matrix(noise, 2));
        double err = 0;
        for (size_t i = 0; i < signal.values.size(); ++i)
            err = std::max(err, std::abs(back.values[i] - signal.values[i]));
        check(err < 1e-12, "moment inversion round trip");
    }

    // deterministic sharded sampling
    {
        ScenarioConfig noon = ScenarioConfig::defaults_for(Scenario::Noon3L4);
        const FockSpace space(4, 2);
        const QubitPreparation prep(2, QubitAmplitudes::excited());
        const TwoModeState state = emitted_state(space, noon.device, prep, {0, 1});
        const RecordBatch a = sample_records(state, noon.chain, 5000, 42);
        const RecordBatch b = sample_records(state, noon.chain, 5000, 42);
        bool same = a.size() == b.size();
        for (size_t i = 0; same && i < a.size(); ++i)
            same = a.records[i].s_l == b.records[i].s_l && a.records[i].s_r == b.records[i].s_r;
        check(same, "record sampling is bit-reproducible");
    }

    // calibration-state identity |<a>| = sqrt(2) <a^dag a>
    {
        ScenarioConfig noon = ScenarioConfig::defaults_for(Scenario::Noon3L4);
        const FockSpace space(4, 2);
        const double r = 1.0 / std::sqrt(2.0);
        const DensityMatrix rho =
            emitted_state(space, noon.device, {QubitAmplitudes{r, r}}, {0}).as_density_matrix();
        const double lhs = std::abs(expect_moment(rho, {0, 1, 0, 0}));
        const double rhs = std::sqrt(2.0) * expect_moment(rho, {1, 1, 0, 0}).real();
        check(std::abs(lhs - rhs) < 1e-12, "calibration-state moment identity");
    }

    std::cout << "selftest passed\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"waveguide-QED two-photon experiment simulator"};
    app.require_subcommand(1);

    std::string config_path, report_dir;
    std::optional<uint64_t> seed;
    std::optional<size_t> shots;
    std::optional<std::string> out_dir;

    CLI::App* run = app.add_subcommand("run", "execute a scenario from a JSON config");
    run->add_option("config", config_path, "scenario config JSON")->required();
    run->add_option("--seed", seed, "override the run seed");
    run->add_option("--shots", shots, "override the shot count");
    run->add_option("--out", out_dir, "override the output directory");

    CLI::App* rep = app.add_subcommand("report", "emit plotting CSVs from a completed run");
    rep->add_option("dir", report_dir, "run output directory")->required();

    app.add_subcommand("selftest", "run the built-in invariant checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (run->parsed()) return run_command(config_path, seed, shots, out_dir);
        if (rep->parsed()) {
            wqed::emit_plot_data(report_dir);
            return 0;
        }
        return selftest();
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
