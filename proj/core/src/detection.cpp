#include "wqed/detection.hpp"

#include <array>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <numbers>
#include <thread>

namespace wqed {

void AmplifierChainParams::check() const {
    if (gain_l < 1.0 || gain_r < 1.0)
        throw std::invalid_argument("AmplifierChainParams: gain must be >= 1");
    if (n_noise_l < 0 || n_noise_r < 0)
        throw std::invalid_argument("AmplifierChainParams: n_noise must be >= 0");
    if (!std::isfinite(gain_l) || !std::isfinite(gain_r))
        throw std::invalid_argument("AmplifierChainParams: non-finite gain");
}

namespace {

void coherent_vector(Complex alpha, int levels, Vector& out) {
    out.resize(levels);
    const double w = std::exp(-0.5 * std::norm(alpha));
    Complex term = w;
    out(0) = term;
    for (int n = 1; n < levels; ++n) {
        term *= alpha / std::sqrt(double(n));
        out(n) = term;
    }
}

}  // namespace

HusimiSampler::HusimiSampler(const TwoModeState& state) : space_(state.space) {
    if (space_.n_modes != 2) throw std::invalid_argument("HusimiSampler: two-mode states only");
    if (space_.cutoff < 2) throw std::invalid_argument("HusimiSampler: cutoff must be >= 2");
    proposal_var_ = double(space_.cutoff + 1);

    Eigen::SelfAdjointEigenSolver<Matrix> es(state.rho);
    for (int k = 0; k < es.eigenvalues().size(); ++k) {
        if (es.eigenvalues()(k) > 1e-14) {
            weights_.push_back(es.eigenvalues()(k));
            vectors_.push_back(es.eigenvectors().col(k));
        }
    }
    if (weights_.empty()) throw std::runtime_error("HusimiSampler: state has no support");

    // Envelope constant: coarse 4D scan, then coordinate-wise ascent.
    auto ratio = [this](const std::array<double, 4>& p) {
        const Complex al(p[0], p[1]), ar(p[2], p[3]);
        return density(al, ar) / proposal_density(al, ar);
    };
    const double radius = 2.0 + std::sqrt(2.0 * space_.cutoff);
    const int n_grid = 7;
    std::array<double, 4> best{0, 0, 0, 0};
    double best_val = ratio(best);
    std::array<double, 4> p{};
    for (int i0 = 0; i0 < n_grid; ++i0)
        for (int i1 = 0; i1 < n_grid; ++i1)
            for (int i2 = 0; i2 < n_grid; ++i2)
                for (int i3 = 0; i3 < n_grid; ++i3) {
                    p = {radius * (2.0 * i0 / (n_grid - 1) - 1.0),
                         radius * (2.0 * i1 / (n_grid - 1) - 1.0),
                         radius * (2.0 * i2 / (n_grid - 1) - 1.0),
                         radius * (2.0 * i3 / (n_grid - 1) - 1.0)};
                    const double v = ratio(p);
                    if (v > best_val) { best_val = v; best = p; }
                }
    double step = radius / (n_grid - 1);
    while (step > 1e-5) {
        bool improved = false;
        for (int c = 0; c < 4; ++c)
            for (double s : {step, -step}) {
                std::array<double, 4> cand = best;
                cand[c] += s;
                const double v = ratio(cand);
                if (v > best_val) { best_val = v; best = cand; improved = true; }
            }
        if (!improved) step *= 0.5;
    }
    if (!std::isfinite(best_val) || best_val <= 0)
        throw std::runtime_error("HusimiSampler: envelope bound search failed");
    bound_ = 1.05 * best_val;
}

double HusimiSampler::density(Complex alpha_l, Complex alpha_r) const {
    static thread_local Vector vl, vr;
    coherent_vector(alpha_l, space_.levels(), vl);
    coherent_vector(alpha_r, space_.levels(), vr);
    double q = 0;
    for (size_t k = 0; k < weights_.size(); ++k) {
        Complex amp = 0;
        const Vector& u = vectors_[k];
        int idx = 0;
        for (int n = 0; n < space_.levels(); ++n)
            for (int m = 0; m < space_.levels(); ++m, ++idx)
                amp += std::conj(u(idx)) * vl(n) * vr(m);
        q += weights_[k] * std::norm(amp);
    }
    constexpr double pi2 = std::numbers::pi * std::numbers::pi;
    return q / pi2;
}

double HusimiSampler::proposal_density(Complex alpha_l, Complex alpha_r) const {
    constexpr double pi2 = std::numbers::pi * std::numbers::pi;
    const double s = proposal_var_;
    return std::exp(-(std::norm(alpha_l) + std::norm(alpha_r)) / s) / (pi2 * s * s);
}

std::pair<Complex, Complex> HusimiSampler::sample(std::mt19937_64& rng) const {
    std::normal_distribution<double> gauss(0.0, std::sqrt(proposal_var_ / 2.0));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int attempt = 0; attempt < 200000; ++attempt) {
        const Complex al(gauss(rng), gauss(rng));
        const Complex ar(gauss(rng), gauss(rng));
        const double u = unif(rng);
        if (u * bound_ * proposal_density(al, ar) <= density(al, ar)) return {al, ar};
    }
    throw std::runtime_error("HusimiSampler: pathological acceptance rate");
}

uint64_t shard_seed(uint64_t seed, uint64_t shard_index) {
    // splitmix64 over the combined words
    uint64_t x = seed + 0x9E3779B97F4A7C15ull * (shard_index + 1);
    x ^= x >> 30; x *= 0xBF58476D1CE4E5B9ull;
    x ^= x >> 27; x *= 0x94D049BB133111EBull;
    x ^= x >> 31;
    return x;
}

RecordBatch sample_records(const TwoModeState& state, const AmplifierChainParams& params,
                           size_t n_shots, uint64_t seed, PrepLabel label) {
    params.check();
    if (n_shots < 1) throw std::invalid_argument("sample_records: n_shots must be >= 1");

    const HusimiSampler sampler(state);
    RecordBatch batch;
    batch.prep_label = label;
    batch.seed = seed;
    batch.params = params;
    batch.records.resize(n_shots);

    const double sqrt_gl = std::sqrt(params.gain_l);
    const double sqrt_gr = std::sqrt(params.gain_r);
    const double sig_l = std::sqrt(params.n_noise_l / 2.0);
    const double sig_r = std::sqrt(params.n_noise_r / 2.0);

    const size_t n_shards = (n_shots + kRecordShardSize - 1) / kRecordShardSize;
    auto run_shard = [&](size_t shard) {
        std::mt19937_64 rng(shard_seed(seed, shard));
        std::normal_distribution<double> gauss(0.0, 1.0);
        const size_t begin = shard * kRecordShardSize;
        const size_t end = std::min(begin + kRecordShardSize, n_shots);
        for (size_t i = begin; i < end; ++i) {
            auto [al, ar] = sampler.sample(rng);
            const Complex nu_l(sig_l * gauss(rng), sig_l * gauss(rng));
            const Complex nu_r(sig_r * gauss(rng), sig_r * gauss(rng));
            batch.records[i] = {sqrt_gl * (al + nu_l), sqrt_gr * (ar + nu_r)};
        }
    };

    size_t n_threads = std::min<size_t>(std::thread::hardware_concurrency(), n_shards);
    if (const char* env = std::getenv("WQED_THREADS")) {
        const long requested = std::strtol(env, nullptr, 10);
        if (requested >= 1) n_threads = std::min<size_t>(size_t(requested), n_shards);
    }
    if (n_threads <= 1) {
        for (size_t s = 0; s < n_shards; ++s) run_shard(s);
    } else {
        std::vector<std::thread> pool;
        std::atomic<size_t> next{0};
        for (size_t t = 0; t < n_threads; ++t)
            pool.emplace_back([&] {
                for (size_t s = next.fetch_add(1); s < n_shards; s = next.fetch_add(1))
                    run_shard(s);
            });
        for (auto& th : pool) th.join();
    }
    return batch;
}

namespace {
constexpr char kMagic[4] = {'W', 'Q', 'E', 'D'};
constexpr uint32_t kVersion = 1;
}  // namespace

void RecordBatch::save_binary(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("RecordBatch::save_binary: cannot open " + path);
    out.write(kMagic, 4);
    auto put = [&out](const void* p, size_t n) { out.write(static_cast<const char*>(p), n); };
    const uint64_t n_shots = records.size();
    const uint8_t label = static_cast<uint8_t>(prep_label);
    put(&kVersion, 4);
    put(&n_shots, 8);
    put(&seed, 8);
    put(&label, 1);
    put(&params.gain_l, 8);
    put(&params.gain_r, 8);
    put(&params.n_noise_l, 8);
    put(&params.n_noise_r, 8);
    for (const auto& r : records) {
        const double vals[4] = {r.s_l.real(), r.s_l.imag(), r.s_r.real(), r.s_r.imag()};
        put(vals, 32);
    }
}

RecordBatch RecordBatch::load_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("RecordBatch::load_binary: cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("RecordBatch::load_binary: bad magic");
    auto get = [&in](void* p, size_t n) { in.read(static_cast<char*>(p), n); };
    uint32_t version;
    uint64_t n_shots;
    uint8_t label;
    RecordBatch batch;
    get(&version, 4);
    if (version != kVersion) throw std::runtime_error("RecordBatch::load_binary: bad version");
    get(&n_shots, 8);
    get(&batch.seed, 8);
    get(&label, 1);
    batch.prep_label = static_cast<PrepLabel>(label);
    get(&batch.params.gain_l, 8);
    get(&batch.params.gain_r, 8);
    get(&batch.params.n_noise_l, 8);
    get(&batch.params.n_noise_r, 8);
    batch.records.resize(n_shots);
    for (auto& r : batch.records) {
        double vals[4];
        get(vals, 32);
        r.s_l = {vals[0], vals[1]};
        r.s_r = {vals[2], vals[3]};
    }
    if (!in) throw std::runtime_error("RecordBatch::load_binary: truncated file");
    return batch;
}

void RecordBatch::save_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("RecordBatch::save_csv: cannot open " + path);
    out.precision(12);
    out << "re_s_l,im_s_l,re_s_r,im_s_r\n";
    for (const auto& r : records)
        out << r.s_l.real() << "," << r.s_l.imag() << ","
            << r.s_r.real() << "," << r.s_r.imag() << "\n";
}

std::vector<double> synth_time_trace(const QubitAmplitudes& prep, double gamma, double f_d,
                                     const std::vector<double>& t_grid, size_t n_avg,
                                     uint64_t seed, double noise_sigma) {
    if (f_d <= 0) throw std::invalid_argument("synth_time_trace: f_d must be > 0");
    for (size_t i = 1; i < t_grid.size(); ++i)
        if (!(t_grid[i] > t_grid[i - 1]))
            throw std::invalid_argument("synth_time_trace: t_grid must be increasing");

    const double coherent_amp = std::abs(prep.alpha) * std::abs(prep.beta);
    const bool fully_excited = std::abs(prep.alpha) < 1e-12;
    // A fully excited qubit still emits shot by shot, but with a uniformly
    // random phase; a single-photon-scale amplitude keeps individual records
    // realistic while the average cancels.
    const double amp = fully_excited ? 0.5 : coherent_amp;
    const double phase0 = std::arg(std::conj(prep.alpha) * prep.beta + Complex(1e-300, 0));

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, noise_sigma);
    std::uniform_real_distribution<double> unif(0.0, 2.0 * std::numbers::pi);

    std::vector<double> avg(t_grid.size(), 0.0);
    for (size_t shot = 0; shot < n_avg; ++shot) {
        const double phi = fully_excited ? unif(rng) : phase0;
        for (size_t i = 0; i < t_grid.size(); ++i) {
            const double t = t_grid[i];
            const double v = std::sqrt(gamma) * amp * std::exp(-0.5 * gamma * t) *
                                 std::cos(2.0 * std::numbers::pi * f_d * t + phi) +
                             gauss(rng);
            avg[i] += v;
        }
    }
    for (double& v : avg) v /= double(n_avg);
    return avg;
}

}  // namespace wqed
