#ifndef WQED_DETECTION_HPP
#define WQED_DETECTION_HPP

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "wqed/emission.hpp"
#include "wqed/fock.hpp"

namespace wqed {

struct AmplifierChainParams {
    double gain_l = 1.0;     // power gain G_L > = 1
    double gain_r = 1.0;
    double n_noise_l = 0.0;  // added-noise thermal occupation
    double n_noise_r = 0.0;

    double eta_l() const { return 1.0 / (1.0 + n_noise_l); }
    double eta_r() const { return 1.0 / (1.0 + n_noise_r); }
    void check() const;
};

struct HeterodyneRecord {
    Complex s_l;
    Complex s_r;
};

enum class PrepLabel : uint8_t { Signal = 0, Ground = 1, Calibration = 2 };

struct RecordBatch {
    std::vector<HeterodyneRecord> records;
    PrepLabel prep_label = PrepLabel::Signal;
    uint64_t seed = 0;
    AmplifierChainParams params;

    size_t size() const { return records.size(); }
    void save_binary(const std::string& path) const;
    static RecordBatch load_binary(const std::string& path);
    void save_csv(const std::string& path) const;
};

// Exact sampler for the two-mode Husimi distribution Q(aL, aR) =
// <aL, aR| rho |aL, aR> / pi^2 via rejection from a product of circular
// Gaussians with per-mode variance (cutoff + 1). The envelope constant is
// located by a coarse 4D scan refined by local ascent and inflated 5%.
class HusimiSampler {
  public:
    explicit HusimiSampler(const TwoModeState& state);

    std::pair<Complex, Complex> sample(std::mt19937_64& rng) const;
    double density(Complex alpha_l, Complex alpha_r) const;  // Q(aL, aR)
    double envelope_bound() const { return bound_; }

  private:
    double proposal_density(Complex alpha_l, Complex alpha_r) const;

    FockSpace space_;
    std::vector<double> weights_;   // eigenvalues of rho above 1e-14
    std::vector<Vector> vectors_;   // matching eigenvectors
    double proposal_var_ = 0;
    double bound_ = 0;
};

// Monte Carlo heterodyne records S = sqrt(G) (alpha + nu): a Husimi sample
// of the signal plus per-side complex Gaussian noise of variance n_noise.
// The shot stream is split into fixed shards seeded by (seed, shard), so
// parallel and serial evaluation agree bit for bit.
RecordBatch sample_records(const TwoModeState& state, const AmplifierChainParams& params,
                           size_t n_shots, uint64_t seed,
                           PrepLabel label = PrepLabel::Signal);

constexpr size_t kRecordShardSize = 4096;
uint64_t shard_seed(uint64_t seed, uint64_t shard_index);

// Averaged downconverted voltage trace of a single-qubit emission
// (the Fig. 2-style diagnostic). Superposition preparations carry a fixed
// phase; a fully excited qubit emits with a uniformly random shot phase, so
// the average tends to the noise floor.
std::vector<double> synth_time_trace(const QubitAmplitudes& prep, double gamma, double f_d,
                                     const std::vector<double>& t_grid, size_t n_avg,
                                     uint64_t seed, double noise_sigma = 1.0);

}  // namespace wqed

#endif
