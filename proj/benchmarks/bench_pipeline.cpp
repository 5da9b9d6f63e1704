#include <benchmark/benchmark.h>

#include <random>

#include "wqed/detection.hpp"
#include "wqed/dynamics.hpp"
#include "wqed/moments.hpp"
#include "wqed/scenario.hpp"
#include "wqed/tomography.hpp"

namespace {

wqed::TwoModeState noon_state() {
    const wqed::ScenarioConfig cfg = wqed::ScenarioConfig::defaults_for(wqed::Scenario::Noon3L4);
    const wqed::FockSpace space(4, 2);
    const wqed::QubitPreparation prep(2, wqed::QubitAmplitudes::excited());
    return wqed::emitted_state(space, cfg.device, prep, {0, 1});
}

void BM_HusimiSample(benchmark::State& state) {
    const wqed::TwoModeState st = noon_state();
    const wqed::HusimiSampler sampler(st);
    std::mt19937_64 rng(1);
    for (auto _ : state) benchmark::DoNotOptimize(sampler.sample(rng));
}
BENCHMARK(BM_HusimiSample);

void BM_SampleRecords(benchmark::State& state) {
    const wqed::TwoModeState st = noon_state();
    wqed::AmplifierChainParams chain;
    chain.gain_l = chain.gain_r = 1e4;
    chain.n_noise_l = chain.n_noise_r = 1.0;
    const size_t n = size_t(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(wqed::sample_records(st, chain, n, 7));
    state.SetItemsProcessed(int64_t(state.iterations()) * int64_t(n));
}
BENCHMARK(BM_SampleRecords)->Arg(1 << 14);

void BM_EmpiricalMoments(benchmark::State& state) {
    const wqed::TwoModeState st = noon_state();
    wqed::AmplifierChainParams chain;
    chain.gain_l = chain.gain_r = 1e4;
    chain.n_noise_l = chain.n_noise_r = 1.0;
    const wqed::RecordBatch batch = wqed::sample_records(st, chain, 1 << 15, 7);
    for (auto _ : state) benchmark::DoNotOptimize(wqed::empirical_moments(batch, 2));
    state.SetItemsProcessed(int64_t(state.iterations()) * int64_t(batch.size()));
}
BENCHMARK(BM_EmpiricalMoments);

void BM_MomentInversion(benchmark::State& state) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> gauss;
    wqed::MomentTable noise(2, wqed::MomentKind::NoiseH), measured(2, wqed::MomentKind::SMeasured);
    for (size_t i = 1; i < noise.values.size(); ++i) {
        noise.values[i] = {gauss(rng), gauss(rng)};
        measured.values[i] = {gauss(rng), gauss(rng)};
    }
    for (auto _ : state) {
        const wqed::Matrix h = wqed::build_h_matrix(noise, 2);
        benchmark::DoNotOptimize(wqed::invert_moments(measured, h));
    }
}
BENCHMARK(BM_MomentInversion);

void BM_Evolve(benchmark::State& state) {
    const wqed::ScenarioConfig cfg = wqed::ScenarioConfig::defaults_for(wqed::Scenario::Noon3L4);
    const wqed::LindbladGenerator gen = wqed::build_generator(cfg.device);
    std::vector<double> grid;
    for (int i = 0; i <= 100; ++i) grid.push_back(i * 0.1 / cfg.device.gamma);
    for (auto _ : state)
        benchmark::DoNotOptimize(wqed::evolve(wqed::all_excited(2), gen, grid));
}
BENCHMARK(BM_Evolve);

void BM_MleTomography(benchmark::State& state) {
    const wqed::ScenarioConfig cfg = wqed::ScenarioConfig::defaults_for(wqed::Scenario::Noon3L4);
    const wqed::FockSpace space(4, 2);
    const wqed::QubitPreparation prep(2, wqed::QubitAmplitudes::excited());
    const wqed::DensityMatrix rho =
        wqed::emitted_state(space, cfg.device, prep, {0, 1}).as_density_matrix();
    wqed::MomentTable table(2, wqed::MomentKind::SignalA);
    const wqed::MomentIndexing ix(2);
    for (int i = 0; i < ix.size(); ++i) {
        table.values[i] = wqed::expect_moment(rho, ix.powers(i));
        table.stderrs[i] = 1e-3;
    }
    wqed::MLEConfig mle;
    mle.n_restarts = 1;
    for (auto _ : state) benchmark::DoNotOptimize(wqed::mle_density_matrix(table, mle));
}
BENCHMARK(BM_MleTomography);

}  // namespace

BENCHMARK_MAIN();
