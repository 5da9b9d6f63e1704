#include "wqed/moments.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

namespace wqed {

int MomentIndexing::flat(const MomentPowers& p) const {
    const int b = order + 1;
    if (p.w < 0 || p.w > order || p.x < 0 || p.x > order || p.y < 0 || p.y > order ||
        p.z < 0 || p.z > order)
        throw std::out_of_range("MomentIndexing: power exceeds order");
    return ((p.w * b + p.x) * b + p.y) * b + p.z;
}

MomentPowers MomentIndexing::powers(int flat_index) const {
    const int b = order + 1;
    MomentPowers p;
    p.z = flat_index % b; flat_index /= b;
    p.y = flat_index % b; flat_index /= b;
    p.x = flat_index % b; flat_index /= b;
    p.w = flat_index;
    return p;
}

MomentTable::MomentTable(int n, MomentKind k) : order(n), kind(k) {
    const int sz = MomentIndexing(n).size();
    values.assign(sz, Complex(0));
    stderrs.assign(sz, 0.0);
    values[0] = 1.0;
}

double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

namespace {

// Per-record monomials conj(sL)^w sL^x conj(sR)^y sR^z for all tuples.
void record_monomials(const HeterodyneRecord& rec, int order, std::vector<Complex>& out) {
    const int b = order + 1;
    std::vector<Complex> pl(b), plc(b), pr(b), prc(b);
    pl[0] = plc[0] = pr[0] = prc[0] = 1.0;
    for (int k = 1; k < b; ++k) {
        pl[k] = pl[k - 1] * rec.s_l;
        plc[k] = plc[k - 1] * std::conj(rec.s_l);
        pr[k] = pr[k - 1] * rec.s_r;
        prc[k] = prc[k - 1] * std::conj(rec.s_r);
    }
    int idx = 0;
    for (int w = 0; w < b; ++w)
        for (int x = 0; x < b; ++x) {
            const Complex left = plc[w] * pl[x];
            for (int y = 0; y < b; ++y)
                for (int z = 0; z < b; ++z, ++idx) out[idx] = left * prc[y] * pr[z];
        }
}

MomentTable mean_moments(const RecordBatch& batch, int order, double gain_l, double gain_r) {
    if (batch.records.empty()) throw std::invalid_argument("empirical_moments: empty batch");
    const MomentIndexing ix(order);
    const int sz = ix.size();

    const size_t n_shards = (batch.size() + kRecordShardSize - 1) / kRecordShardSize;
    std::vector<std::vector<Complex>> shard_sums(n_shards, std::vector<Complex>(sz, Complex(0)));
    std::vector<size_t> shard_counts(n_shards, 0);
    std::vector<Complex> mono(sz);
    for (size_t s = 0; s < n_shards; ++s) {
        const size_t begin = s * kRecordShardSize;
        const size_t end = std::min(begin + kRecordShardSize, batch.size());
        shard_counts[s] = end - begin;
        for (size_t i = begin; i < end; ++i) {
            record_monomials(batch.records[i], order, mono);
            for (int j = 0; j < sz; ++j) shard_sums[s][j] += mono[j];
        }
    }

    std::vector<Complex> total(sz, Complex(0));
    for (size_t s = 0; s < n_shards; ++s)
        for (int j = 0; j < sz; ++j) total[j] += shard_sums[s][j];

    MomentTable table(order, MomentKind::SMeasured);
    const double n = double(batch.size());
    for (int j = 0; j < sz; ++j) {
        const MomentPowers p = ix.powers(j);
        const double scale = std::pow(gain_l, -0.5 * (p.w + p.x)) *
                             std::pow(gain_r, -0.5 * (p.y + p.z));
        table.values[j] = scale * total[j] / n;

        // Leave-one-shard-out jackknife.
        if (n_shards > 1) {
            const Complex mean = total[j] / n;
            double var = 0;
            for (size_t s = 0; s < n_shards; ++s) {
                const Complex loo = (total[j] - shard_sums[s][j]) / (n - double(shard_counts[s]));
                var += std::norm(loo - mean);
            }
            var *= double(n_shards - 1) / double(n_shards);
            table.stderrs[j] = scale * std::sqrt(var);
        }
    }
    table.values[0] = 1.0;
    table.stderrs[0] = 0.0;
    return table;
}

}  // namespace

MomentTable empirical_moments(const RecordBatch& batch, int order) {
    return mean_moments(batch, order, batch.params.gain_l, batch.params.gain_r);
}

MomentTable raw_moments(const RecordBatch& batch, int order) {
    return mean_moments(batch, order, 1.0, 1.0);
}

namespace {

// Deconvolve analytic thermal signal moments <a^dag^n a^n> = n_th^n n! from
// a measured ground-state table, leaving pure chain-noise moments.
MomentTable deconvolve_thermal(const MomentTable& measured, double n_th) {
    const int order = measured.order;
    MomentTable noise(order, MomentKind::NoiseH);
    noise.stderrs = measured.stderrs;
    const MomentIndexing ix(order);
    auto thermal = [n_th](const MomentPowers& p) -> double {
        if (p.w != p.x || p.y != p.z) return 0.0;
        double v = 1.0;
        for (int i = 1; i <= p.w; ++i) v *= n_th * i;
        for (int i = 1; i <= p.y; ++i) v *= n_th * i;
        return v;
    };
    for (int j = 0; j < ix.size(); ++j) {
        const MomentPowers t = ix.powers(j);
        Complex acc = measured.values[j];
        for (int w = 0; w <= t.w; ++w)
            for (int x = 0; x <= t.x; ++x)
                for (int y = 0; y <= t.y; ++y)
                    for (int z = 0; z <= t.z; ++z) {
                        if (w + x + y + z == 0) continue;
                        const MomentPowers sig{w, x, y, z};
                        const double th = thermal(sig);
                        if (th == 0) continue;
                        const double c = binomial(t.w, w) * binomial(t.x, x) *
                                         binomial(t.y, y) * binomial(t.z, z);
                        const MomentPowers rem{t.w - w, t.x - x, t.y - y, t.z - z};
                        acc -= c * th * noise.values[ix.flat(rem)];
                    }
        noise.values[j] = acc;
    }
    noise.values[0] = 1.0;
    return noise;
}

}  // namespace

MomentTable noise_moments(const RecordBatch& ground_batch, int order,
                          std::optional<double> thermal_correction) {
    if (ground_batch.prep_label != PrepLabel::Ground)
        throw std::invalid_argument("noise_moments: batch is not a ground-state batch");
    MomentTable measured = empirical_moments(ground_batch, order);
    if (thermal_correction) return deconvolve_thermal(measured, *thermal_correction);
    // Vacuum-signal approximation: noise moments equal the measured ones.
    MomentTable noise(order, MomentKind::NoiseH);
    noise.values = measured.values;
    noise.stderrs = measured.stderrs;
    return noise;
}

Matrix build_h_matrix(const MomentTable& noise, int order) {
    if (noise.order < order)
        throw std::invalid_argument("build_h_matrix: noise table incomplete for requested order");
    const MomentIndexing ix(order);
    const int sz = ix.size();
    Matrix h = Matrix::Zero(sz, sz);
    for (int row = 0; row < sz; ++row) {
        const MomentPowers t = ix.powers(row);
        for (int w = 0; w <= t.w; ++w)
            for (int x = 0; x <= t.x; ++x)
                for (int y = 0; y <= t.y; ++y)
                    for (int z = 0; z <= t.z; ++z) {
                        const int col = ix.flat({w, x, y, z});
                        const double c = binomial(t.w, w) * binomial(t.x, x) *
                                         binomial(t.y, y) * binomial(t.z, z);
                        h(row, col) = c * noise.at({t.w - w, t.x - x, t.y - y, t.z - z});
                    }
    }
    return h;
}

MomentTable invert_moments(const MomentTable& measured, const Matrix& h) {
    const MomentIndexing ix(measured.order);
    const int sz = ix.size();
    if (h.rows() != sz || h.cols() != sz)
        throw std::invalid_argument("invert_moments: dimension mismatch");
    for (int i = 0; i < sz; ++i)
        if (std::abs(h(i, i) - Complex(1.0)) > 1e-9)
            throw std::invalid_argument("invert_moments: non-unit diagonal in H");

    MomentTable out(measured.order, MomentKind::SignalA);
    out.stderrs = measured.stderrs;
    for (int i = 0; i < sz; ++i) {
        Complex acc = measured.values[i];
        for (int j = 0; j < i; ++j) acc -= h(i, j) * out.values[j];
        out.values[i] = acc;
    }
    return out;
}

MomentTable compose_moments(const MomentTable& signal, const MomentTable& noise) {
    if (signal.order != noise.order)
        throw std::invalid_argument("compose_moments: order mismatch");
    const Matrix h = build_h_matrix(noise, signal.order);
    MomentTable out(signal.order, MomentKind::SMeasured);
    const MomentIndexing ix(signal.order);
    for (int i = 0; i < ix.size(); ++i) {
        Complex acc = 0;
        for (int j = 0; j <= i; ++j) acc += h(i, j) * signal.values[j];
        out.values[i] = acc;
    }
    return out;
}

namespace {

MomentTable scale_by_gain(const MomentTable& raw, Side side, double gain) {
    MomentTable out = raw;
    const MomentIndexing ix(raw.order);
    for (int j = 0; j < ix.size(); ++j) {
        const MomentPowers p = ix.powers(j);
        const int tot = side == Side::Left ? p.w + p.x : p.y + p.z;
        const double s = std::pow(gain, -0.5 * tot);
        out.values[j] *= s;
        out.stderrs[j] *= s;
    }
    return out;
}

}  // namespace

double calibrate_gain(const MomentTable& raw_cal, const MomentTable& raw_ground,
                      Side side, double initial_guess,
                      std::optional<double> thermal_correction) {
    if (initial_guess <= 0) throw std::invalid_argument("calibrate_gain: bad initial guess");
    const MomentPowers first = side == Side::Left ? MomentPowers{0, 1, 0, 0}
                                                  : MomentPowers{0, 0, 0, 1};
    const MomentPowers second = side == Side::Left ? MomentPowers{1, 1, 0, 0}
                                                   : MomentPowers{0, 0, 1, 1};
    auto f = [&](double gain) {
        MomentTable noise = scale_by_gain(raw_ground, side, gain);
        if (thermal_correction) noise = deconvolve_thermal(noise, *thermal_correction);
        const MomentTable meas = scale_by_gain(raw_cal, side, gain);
        const Matrix h = build_h_matrix(noise, raw_cal.order);
        const MomentTable sig = invert_moments(meas, h);
        return std::abs(sig.at(first)) - std::sqrt(2.0) * sig.at(second).real();
    };

    double lo = initial_guess / 4.0, hi = initial_guess * 4.0;
    double flo = f(lo), fhi = f(hi);
    for (int i = 0; i < 40 && flo * fhi > 0; ++i) {
        lo /= 4.0; hi *= 4.0;
        flo = f(lo); fhi = f(hi);
    }
    if (flo * fhi > 0)
        throw std::runtime_error("calibrate_gain: no sign change in bracket (bad data)");

    // f increases with G, bisect on log G.
    double llo = std::log(lo), lhi = std::log(hi);
    while (lhi - llo > 1e-6) {
        const double mid = 0.5 * (llo + lhi);
        if (f(std::exp(mid)) * flo <= 0) lhi = mid; else { llo = mid; flo = f(std::exp(llo)); }
    }
    return std::exp(0.5 * (llo + lhi));
}

nlohmann::json MomentTable::to_json() const {
    nlohmann::json j;
    j["order"] = order;
    j["kind"] = kind == MomentKind::SMeasured ? "S_measured"
                : kind == MomentKind::NoiseH  ? "noise_h"
                                              : "signal_a";
    const MomentIndexing ix(order);
    auto& entries = j["entries"];
    entries = nlohmann::json::array();
    for (int i = 0; i < ix.size(); ++i) {
        const MomentPowers p = ix.powers(i);
        entries.push_back({{"w", p.w}, {"x", p.x}, {"y", p.y}, {"z", p.z},
                           {"re", values[i].real()}, {"im", values[i].imag()},
                           {"stderr", stderrs[i]}});
    }
    return j;
}

void MomentTable::save_json(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("MomentTable::save_json: cannot open " + path);
    out << to_json().dump(2) << "\n";
}

MomentTable MomentTable::from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind");
    MomentTable table(j.at("order").get<int>(),
                      kind == "S_measured" ? MomentKind::SMeasured
                      : kind == "noise_h"  ? MomentKind::NoiseH
                                           : MomentKind::SignalA);
    for (const auto& e : j.at("entries")) {
        const MomentPowers p{e.at("w").get<int>(), e.at("x").get<int>(),
                             e.at("y").get<int>(), e.at("z").get<int>()};
        const int i = table.indexing().flat(p);
        table.values[i] = Complex(e.at("re").get<double>(), e.at("im").get<double>());
        table.stderrs[i] = e.at("stderr").get<double>();
    }
    return table;
}

MomentTable MomentTable::load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("MomentTable::load_json: cannot open " + path);
    nlohmann::json j;
    in >> j;
    return from_json(j);
}

}  // namespace wqed
