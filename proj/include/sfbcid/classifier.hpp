#pragma once

// Serial eigenvalue test per subcarrier pair, the overestimation-counting
// distance, and the two-level decision tree over the seven-code pool.
//
//   level 1 (odd pairs k = 1, 3, .., N-1), branch templates
//       SFC1 = {SA, AL} -> 4     SFC2 = {SFBC2, SFBC3} -> 6
//       SFC3 = {SM2, SFBC1} -> 8 SM3 (leaf) -> 12
//   level 2
//       SFC1: k = 2, 4, .., N-2    SA (4)    vs AL (8)
//       SFC2: k = 4, 8, .., N-4    SFBC2 (8) vs SFBC3 (10)
//       SFC3: k = 8, 16, .., N-8   SM2 (8)   vs SFBC1 (12)
//
// Ties in the distance go to the candidate with the smaller template value.

#include <array>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

#include "sfbcid/codebook.hpp"
#include "sfbcid/rmt.hpp"
#include "sfbcid/subspace.hpp"
#include "sfbcid/waveform.hpp"

namespace sfbcid {

/// What N is in the overestimation allowance ceil(N pr_f): the FFT size
/// (default) or the number of pairs tested at the current level.
enum class AllowanceBasis { fft_size, tests };

inline constexpr std::string_view to_string(AllowanceBasis b) {
    return b == AllowanceBasis::fft_size ? "fft_size" : "tests";
}

inline AllowanceBasis parse_allowance_basis(std::string_view s) {
    if (s == "fft_size") return AllowanceBasis::fft_size;
    if (s == "tests") return AllowanceBasis::tests;
    throw ConfigError("allowance basis must be 'fft_size' or 'tests'");
}

struct DetectorConfig {
    double pr_f = 1e-4;
    int n_r = 8;
    int n_b = 100;
    int n_fft = 128;
    AllowanceBasis allowance = AllowanceBasis::fft_size;

    int allowance_basis(int tests) const { return allowance == AllowanceBasis::fft_size ? n_fft : tests; }

    void validate() const {
        rmt::check_false_alarm(pr_f);
        if (n_fft < 16 || n_fft % 8 != 0)
            throw ConfigError("the decision tree needs n_fft >= 16 and a multiple of 8");
        if (n_r < 1 || n_b < 2) throw ConfigError("need n_r >= 1 and n_b >= 2");
    }
};

enum class Subset { SFC1, SFC2, SFC3, SM3 };

inline constexpr std::array<Subset, 4> kSubsets{Subset::SFC1, Subset::SFC2, Subset::SFC3,
                                                Subset::SM3};

inline constexpr std::string_view to_string(Subset s) {
    switch (s) {
        case Subset::SFC1: return "SFC1";
        case Subset::SFC2: return "SFC2";
        case Subset::SFC3: return "SFC3";
        case Subset::SM3: return "SM3";
    }
    return "?";
}

/// Level-1 branch label: the common template value of the subset on odd pairs.
inline constexpr int branch_template(Subset s) {
    switch (s) {
        case Subset::SFC1: return 4;
        case Subset::SFC2: return 6;
        case Subset::SFC3: return 8;
        case Subset::SM3: return 12;
    }
    return 0;
}

inline constexpr Subset subset_of(Scheme s) {
    switch (s) {
        case Scheme::SA:
        case Scheme::AL: return Subset::SFC1;
        case Scheme::SFBC2:
        case Scheme::SFBC3: return Subset::SFC2;
        case Scheme::SM2:
        case Scheme::SFBC1: return Subset::SFC3;
        case Scheme::SM3: return Subset::SM3;
    }
    return Subset::SM3;
}

/// Level-2 candidates in ascending template order, and the pair stride.
struct LevelTwoPlan {
    std::array<Scheme, 2> candidates;
    int stride;
};

inline LevelTwoPlan level_two_plan(Subset s) {
    switch (s) {
        case Subset::SFC1: return {{Scheme::SA, Scheme::AL}, 2};
        case Subset::SFC2: return {{Scheme::SFBC2, Scheme::SFBC3}, 4};
        case Subset::SFC3: return {{Scheme::SM2, Scheme::SFBC1}, 8};
        case Subset::SM3: break;
    }
    throw ParameterError("SM3 is a leaf of the decision tree");
}

/// Pairs tested at level 1 (odd k) or for a level-2 stride (k = stride, 2 stride, .., N - stride).
inline std::vector<int> level_one_pairs(int n_fft) {
    std::vector<int> ks;
    for (int k = 1; k <= n_fft - 1; k += 2) ks.push_back(k);
    return ks;
}

inline std::vector<int> level_two_pairs(int n_fft, int stride) {
    std::vector<int> ks;
    for (int k = stride; k <= n_fft - stride; k += stride) ks.push_back(k);
    return ks;
}

/// Estimated signal-subspace dimension per tested pair.
using FeatureVector = std::map<int, int>;

/// Serial test: the first q with U_q <= gamma_q gives q - 1; if every test
/// rejects, the estimate saturates at 4 n_r - 1.
inline int estimate_dimension(const subspace::TestStatistics& stats, const rmt::ThresholdSet& th) {
    const int last = std::min(stats.count(), th.count());
    for (int q = 1; q <= last; ++q)
        if (stats.at(q) <= th.ratio(q)) return q - 1;
    return last;
}

/// ceil(N pr_f), robust to the last-bit error of the product.
inline int overestimate_allowance(int n_basis, double pr_f) {
    return static_cast<int>(std::ceil(n_basis * pr_f - 1e-9));
}

/// d_c = | sum_k step(qhat(k) - q(k)) - ceil(N pr_f) |, step(t) = 1 for t > 0,
/// with N = n_basis.
template <class TemplateAt>
    requires std::invocable<TemplateAt&, int>
int distance(const FeatureVector& estimates, TemplateAt&& q_at, const std::vector<int>& indices,
             int n_basis, double pr_f) {
    int over = 0;
    for (int k : indices) {
        const auto it = estimates.find(k);
        if (it == estimates.end()) throw ParameterError("no estimate for pair " + std::to_string(k));
        over += it->second > q_at(k) ? 1 : 0;
    }
    return std::abs(over - overestimate_allowance(n_basis, pr_f));
}

inline int distance(const FeatureVector& estimates, const FeatureTemplate& tmpl,
                    const std::vector<int>& indices, int n_basis, double pr_f) {
    return distance(estimates, [&](int k) { return tmpl.at(k); }, indices, n_basis, pr_f);
}

inline int distance(const FeatureVector& estimates, int constant_template,
                    const std::vector<int>& indices, int n_basis, double pr_f) {
    return distance(estimates, [&](int) { return constant_template; }, indices, n_basis, pr_f);
}

struct LevelOneResult {
    Subset chosen = Subset::SFC1;
    std::array<int, 4> distances{};  // in kSubsets order
    int tested = 0;
};

struct LevelTwoResult {
    std::array<Scheme, 2> candidates{};
    std::array<int, 2> distances{};
    int tested = 0;
};

struct IdentificationResult {
    Scheme scheme = Scheme::SA;
    LevelOneResult level1;
    std::optional<LevelTwoResult> level2;
    FeatureVector estimates;
};

class Detector {
public:
    explicit Detector(const DetectorConfig& cfg)
        : cfg_((cfg.validate(), cfg)), thresholds_(cfg.n_r, cfg.n_b, cfg.pr_f) {}

    const DetectorConfig& config() const { return cfg_; }
    const rmt::ThresholdSet& thresholds() const { return thresholds_; }

    int estimate(const FrequencyGrid& g, int k) const {
        return estimate_dimension(subspace::statistics(subspace::pair_covariance(g, k)), thresholds_);
    }

    IdentificationResult identify(const FrequencyGrid& g) const {
        check_grid(g);
        IdentificationResult res;

        const auto odd = level_one_pairs(cfg_.n_fft);
        for (int k : odd) res.estimates[k] = estimate(g, k);
        res.level1.tested = static_cast<int>(odd.size());
        int best = -1;
        for (std::size_t i = 0; i < kSubsets.size(); ++i) {
            const int d = distance(res.estimates, branch_template(kSubsets[i]), odd,
                                   cfg_.allowance_basis(static_cast<int>(odd.size())), cfg_.pr_f);
            res.level1.distances[i] = d;
            if (best < 0 || d < res.level1.distances[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
        }
        res.level1.chosen = kSubsets[static_cast<std::size_t>(best)];
        if (res.level1.chosen == Subset::SM3) {
            res.scheme = Scheme::SM3;
            return res;
        }

        const auto plan = level_two_plan(res.level1.chosen);
        const auto pairs = level_two_pairs(cfg_.n_fft, plan.stride);
        for (int k : pairs)
            if (!res.estimates.contains(k)) res.estimates[k] = estimate(g, k);
        LevelTwoResult l2{plan.candidates, {}, static_cast<int>(pairs.size())};
        for (int c = 0; c < 2; ++c)
            l2.distances[static_cast<std::size_t>(c)] =
                distance(res.estimates, feature_template(plan.candidates[static_cast<std::size_t>(c)], cfg_.n_fft),
                         pairs, cfg_.allowance_basis(static_cast<int>(pairs.size())), cfg_.pr_f);
        res.scheme = l2.distances[1] < l2.distances[0] ? plan.candidates[1] : plan.candidates[0];
        res.level2 = l2;
        return res;
    }

private:
    void check_grid(const FrequencyGrid& g) const {
        if (g.n_fft != cfg_.n_fft || g.n_rx != cfg_.n_r || g.n_symbols() != cfg_.n_b)
            throw ConfigError("grid dimensions (N=" + std::to_string(g.n_fft) + ", N_r=" +
                              std::to_string(g.n_rx) + ", N_b=" + std::to_string(g.n_symbols()) +
                              ") do not match the detector configuration");
    }

    DetectorConfig cfg_;
    rmt::ThresholdSet thresholds_;
};

inline IdentificationResult identify(const FrequencyGrid& g, const DetectorConfig& cfg) {
    return Detector(cfg).identify(g);
}

inline IdentificationResult identify(const ReceivedGrid& r, const DetectorConfig& cfg) {
    return identify(r.grid, cfg);
}

// ---------------------------------------------------------------------------
// Analytic bound

/// sum_{i=0}^{ceil(N pr_f)} C(K, i) pr_o^i (1 - pr_o)^(K - i)
inline double upper_bound(double pr_o, int k_tests, int n_basis, double pr_f) {
    if (!(pr_o >= 0.0 && pr_o <= 1.0)) throw ParameterError("pr_o must lie in [0, 1]");
    if (k_tests < 0) throw ParameterError("test count must be >= 0");
    const int c = std::min(overestimate_allowance(n_basis, pr_f), k_tests);
    if (pr_o == 0.0) return 1.0;
    if (pr_o == 1.0) return c >= k_tests ? 1.0 : 0.0;
    double term = std::pow(1.0 - pr_o, k_tests);
    double sum = term;
    for (int i = 0; i < c; ++i) {
        term *= static_cast<double>(k_tests - i) / (i + 1) * pr_o / (1.0 - pr_o);
        sum += term;
    }
    return std::min(sum, 1.0);
}

/// Number of pair tests at level 1 and, for non-leaf subsets, at level 2.
inline std::pair<int, int> tests_per_level(Scheme s, int n_fft) {
    const Subset sub = subset_of(s);
    if (sub == Subset::SM3) return {n_fft / 2, 0};
    return {n_fft / 2, n_fft / level_two_plan(sub).stride - 1};
}

/// Bound for the whole tree path of one scheme (product over the levels it visits).
inline double joint_upper_bound(Scheme s, double pr_o, int n_fft, double pr_f,
                                AllowanceBasis basis = AllowanceBasis::fft_size) {
    const auto [k1, k2] = tests_per_level(s, n_fft);
    const auto n_of = [&](int k) { return basis == AllowanceBasis::fft_size ? n_fft : k; };
    double b = upper_bound(pr_o, k1, n_of(k1), pr_f);
    if (k2 > 0) b *= upper_bound(pr_o, k2, n_of(k2), pr_f);
    return b;
}

// ---------------------------------------------------------------------------
// Complexity model

enum class FlopsModel { proposed, ref19, ref20 };

struct FlopsParams {
    std::int64_t n_fft = 128;
    std::int64_t n_r = 8;
    std::int64_t n_b = 100;
    std::int64_t cp_len = 10;
    std::int64_t card_xi = -1;       // receive-antenna pairs; -1 means n_r (n_r - 1) / 2
    std::int64_t card_upsilon = 7;   // time lags
};

inline std::int64_t flops(FlopsModel model, const FlopsParams& p) {
    if (p.n_fft <= 0 || p.n_r <= 0 || p.n_b <= 0 || p.cp_len < 0 || p.card_upsilon < 0)
        throw ParameterError("flops parameters must be positive");
    const std::int64_t nr2 = p.n_r * p.n_r;
    const std::int64_t nr3 = nr2 * p.n_r;
    switch (model) {
        case FlopsModel::proposed: return 48 * p.n_fft * nr3 + 24 * p.n_fft * p.n_b * nr2;
        case FlopsModel::ref20: return 64 * p.n_fft * nr3 + 32 * p.n_fft * p.n_b * nr2;
        case FlopsModel::ref19: {
            const std::int64_t xi = p.card_xi >= 0 ? p.card_xi : p.n_r * (p.n_r - 1) / 2;
            return 8 * p.n_b * xi * (p.n_fft + p.cp_len) * (p.card_upsilon + 1);
        }
    }
    return 0;
}

/// Parameter groups of the reference complexity table (nu = 10, |Upsilon| = 7).
struct FlopsGroup {
    std::string_view name;
    FlopsParams params;
};

inline constexpr std::array<FlopsGroup, 4> kFlopsGroups{{
    {"I", {128, 4, 100, 10, -1, 7}},
    {"II", {64, 8, 100, 10, -1, 7}},
    {"III", {128, 8, 50, 10, -1, 7}},
    {"IV", {128, 8, 100, 10, -1, 7}},
}};

inline std::string_view to_string(FlopsModel m) {
    switch (m) {
        case FlopsModel::proposed: return "proposed";
        case FlopsModel::ref19: return "ref19";
        case FlopsModel::ref20: return "ref20";
    }
    return "?";
}

inline FlopsModel parse_flops_model(std::string_view s) {
    if (s == "proposed") return FlopsModel::proposed;
    if (s == "ref19") return FlopsModel::ref19;
    if (s == "ref20") return FlopsModel::ref20;
    throw ParameterError("unknown flops model '" + std::string(s) + "'");
}

}  // namespace sfbcid
