#ifndef WQED_MOMENTS_HPP
#define WQED_MOMENTS_HPP

#include <optional>
#include <string>

#include <json.hpp>

#include "wqed/detection.hpp"
#include "wqed/fock.hpp"

namespace wqed {

// Canonical flat indexing of 4-tuples (w, x, y, z), each component in
// [0, N]: lexicographic with z fastest-varying. Component-wise dominance
// implies flat-index order, which is what makes the mixing matrix between
// amplified and signal moments lower-triangular.
struct MomentIndexing {
    int order;

    explicit MomentIndexing(int n) : order(n) {
        if (n < 1) throw std::invalid_argument("MomentIndexing: order must be >= 1");
    }
    int size() const { const int b = order + 1; return b * b * b * b; }
    int flat(const MomentPowers& p) const;
    MomentPowers powers(int flat_index) const;
};

enum class MomentKind { SMeasured, NoiseH, SignalA };

// Complete table of fourth-index moments up to a given order.
//   SMeasured: <S'_L^dag^w S'_L^x S'_R^dag^y S'_R^z>, gain divided out
//   NoiseH:    <h_L^w h_L^dag^x h_R^y h_R^dag^z>
//   SignalA:   <a_L^dag^w a_L^x a_R^dag^y a_R^z>
struct MomentTable {
    int order = 2;
    MomentKind kind = MomentKind::SMeasured;
    std::vector<Complex> values;
    std::vector<double> stderrs;

    MomentTable() = default;
    MomentTable(int n, MomentKind k);

    MomentIndexing indexing() const { return MomentIndexing(order); }
    Complex& at(const MomentPowers& p) { return values[indexing().flat(p)]; }
    Complex at(const MomentPowers& p) const { return values[indexing().flat(p)]; }
    double stderr_at(const MomentPowers& p) const { return stderrs[indexing().flat(p)]; }

    nlohmann::json to_json() const;
    static MomentTable from_json(const nlohmann::json& j);
    void save_json(const std::string& path) const;
    static MomentTable load_json(const std::string& path);
};

// Sample means of S_L*^w S_L^x S_R*^y S_R^z scaled by G_L^-(w+x)/2 G_R^-(y+z)/2,
// with leave-one-shard-out jackknife standard errors.
MomentTable empirical_moments(const RecordBatch& batch, int order);

// Same but with unit gain, for gain calibration.
MomentTable raw_moments(const RecordBatch& batch, int order);

// Noise moments from a ground-state batch. Without thermal correction the
// signal is treated as vacuum; with correction the analytic thermal signal
// moments <a^dag^n a^n> = n_th^n n! are deconvolved (also a triangular solve).
MomentTable noise_moments(const RecordBatch& ground_batch, int order,
                          std::optional<double> thermal_correction = std::nullopt);

// Mixing matrix H with H[(n,m,k,l),(w,x,y,z)] =
//   C(n,w) C(m,x) C(k,y) C(l,z) * noise(n-w, m-x, k-y, l-z)
// for component-wise (w,x,y,z) <= (n,m,k,l); strictly lower-triangular
// above unit diagonal under the canonical indexing.
Matrix build_h_matrix(const MomentTable& noise, int order);

// Forward substitution for the signal moments: S = H a  =>  a.
MomentTable invert_moments(const MomentTable& measured, const Matrix& h);

// Forward composition (the relation S = H a applied directly); used to
// round-trip the inversion.
MomentTable compose_moments(const MomentTable& signal, const MomentTable& noise);

// Side selector shared with the tomography fits.
enum class Side { Left, Right };

// Gain calibration from the single-qubit (|g>+|e>)/sqrt(2) emission, whose
// photonic state |00>/sqrt(2) + (|10>+|01>)/2 satisfies
// |<a>| = sqrt(2) <a^dag a>. Both tables must be raw (unit-gain) moments;
// candidate gains are applied internally. Bisection on log G to rel. 1e-6.
// Residual thermal photons in the ground run bias the recovered gain by
// ~2 n_th / <a^dag a>; pass thermal_correction to deconvolve them.
double calibrate_gain(const MomentTable& raw_cal, const MomentTable& raw_ground,
                      Side side, double initial_guess,
                      std::optional<double> thermal_correction = std::nullopt);

double binomial(int n, int k);

}  // namespace wqed

#endif
