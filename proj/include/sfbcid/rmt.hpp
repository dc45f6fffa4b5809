#pragma once

// Tracy-Widom (beta = 1) engine and the false-alarm thresholds built on it.
//
// The CDF and its second derivative come from a precomputed table
// (data/tw1_table.csv, regenerated by tools/gen_tw_table.py and compiled in
// through detail/tw1_table.inc). Lookups use monotone piecewise-cubic
// (Fritsch-Carlson) interpolation for the CDF and linear interpolation for
// the second derivative.
//
// Scale convention: mu_{u,p} and xi_{u,p} are the centering and scaling of
// the largest eigenvalue of an unnormalised real Wishart matrix Y Y^T with Y
// of size u x p. The eigenvalue-ratio statistic U = l_1 / mean(l) of a
// sample covariance is scale-free and concentrates around mu/p, so it has
// to be multiplied by p (the sample count) before it is standardised.
// threshold() returns gamma on the Wishart scale; ThresholdSet stores
// gamma / p, which is directly comparable with U.

#include <algorithm>
#include <cmath>
#include <vector>

#include "sfbcid/types.hpp"

namespace sfbcid::rmt {

namespace detail {
#include "sfbcid/detail/tw1_table.inc"
}  // namespace detail

class TracyWidomTable {
public:
    static const TracyWidomTable& instance() {
        static const TracyWidomTable table;
        return table;
    }

    double z_min() const { return detail::kTw1ZMin; }
    double z_max() const { return detail::kTw1ZMin + detail::kTw1Step * (rows() - 1); }
    double step() const { return detail::kTw1Step; }
    int rows() const { return detail::kTw1Rows; }
    double z_at(int i) const { return detail::kTw1ZMin + detail::kTw1Step * i; }
    double cdf_at(int i) const { return cdf_[static_cast<std::size_t>(i)]; }
    double d2cdf_at(int i) const { return detail::kTw1D2Cdf[i]; }

    /// F_TW1(z); 0 below the grid, 1 above it.
    double cdf(double z) const {
        if (z <= z_min()) return z < z_min() ? 0.0 : cdf_.front();
        if (z >= z_max()) return z > z_max() ? 1.0 : cdf_.back();
        const auto [i, t] = locate(z);
        const double h = step();
        const double t2 = t * t;
        const double t3 = t2 * t;
        const double h00 = 2 * t3 - 3 * t2 + 1;
        const double h10 = t3 - 2 * t2 + t;
        const double h01 = -2 * t3 + 3 * t2;
        const double h11 = t3 - t2;
        const auto ui = static_cast<std::size_t>(i);
        return h00 * cdf_[ui] + h10 * h * slope_[ui] + h01 * cdf_[ui + 1] +
               h11 * h * slope_[ui + 1];
    }

    /// F''_TW1(z); 0 outside the grid.
    double d2cdf(double z) const {
        if (z < z_min() || z > z_max()) return 0.0;
        if (z == z_max()) return d2cdf_at(rows() - 1);
        const auto [i, t] = locate(z);
        return (1.0 - t) * d2cdf_at(i) + t * d2cdf_at(i + 1);
    }

private:
    TracyWidomTable() {
        const int n = rows();
        cdf_.assign(detail::kTw1Cdf, detail::kTw1Cdf + n);
        // Monotone by construction: running maximum, then Fritsch-Carlson slopes.
        for (int i = 1; i < n; ++i) cdf_[i] = std::max(cdf_[i], cdf_[i - 1]);
        std::vector<double> secant(static_cast<std::size_t>(n - 1));
        for (int i = 0; i + 1 < n; ++i) secant[i] = (cdf_[i + 1] - cdf_[i]) / step();
        slope_.assign(static_cast<std::size_t>(n), 0.0);
        slope_[0] = secant[0];
        slope_[n - 1] = secant[n - 2];
        for (int i = 1; i + 1 < n; ++i) {
            const double a = secant[i - 1];
            const double b = secant[i];
            slope_[i] = (a > 0.0 && b > 0.0) ? 2.0 * a * b / (a + b) : 0.0;
        }
    }

    std::pair<int, double> locate(double z) const {
        const double pos = (z - z_min()) / step();
        int i = static_cast<int>(pos);
        i = std::clamp(i, 0, rows() - 2);
        return {i, pos - i};
    }

    std::vector<double> cdf_;
    std::vector<double> slope_;
};

inline double tw1_cdf(double z) { return TracyWidomTable::instance().cdf(z); }
inline double tw1_d2cdf(double z) { return TracyWidomTable::instance().d2cdf(z); }

struct CenteringScaling {
    double mu;
    double xi;
    int u;
    int p;
};

inline CenteringScaling centering_scaling(int u, int p) {
    if (u < 1 || p < 1) throw ParameterError("Wishart dimensions must be >= 1");
    const double su = std::sqrt(u - 0.5);
    const double sp = std::sqrt(p - 0.5);
    const double mu = (su + sp) * (su + sp);
    const double xi = std::sqrt(mu) * std::cbrt(1.0 / su + 1.0 / sp);
    return {mu, xi, u, p};
}

/// Weight of the F'' correction: (mu / xi)^2 / (u p).
inline double correction_weight(int u, int p) {
    const auto cs = centering_scaling(u, p);
    const double r = cs.mu / cs.xi;
    return r * r / (static_cast<double>(u) * static_cast<double>(p));
}

/// Finite-size corrected CDF of the standardised eigenvalue-ratio statistic,
/// clamped to [0, 1].
inline double corrected_cdf(double z, int u, int p) {
    const double v = tw1_cdf(z) - correction_weight(u, p) * tw1_d2cdf(z);
    return std::clamp(v, 0.0, 1.0);
}

namespace detail {

/// Smallest z with clamp(F(z) - w F''(z)) >= prob: first crossing at the
/// table nodes, then bisection inside that cell. Clamped to the table range.
inline double first_crossing(double prob, double w) {
    if (!(prob > 0.0 && prob < 1.0)) throw ParameterError("probability must lie in (0, 1)");
    const auto& tab = TracyWidomTable::instance();
    const auto at_node = [&](int i) {
        return std::clamp(tab.cdf_at(i) - w * tab.d2cdf_at(i), 0.0, 1.0);
    };
    const auto at = [&](double z) { return std::clamp(tab.cdf(z) - w * tab.d2cdf(z), 0.0, 1.0); };
    int hit = -1;
    for (int i = 0; i < tab.rows(); ++i) {
        if (at_node(i) >= prob) {
            hit = i;
            break;
        }
    }
    if (hit < 0) return tab.z_max();
    if (hit == 0) return tab.z_min();

    double lo = tab.z_at(hit - 1);
    double hi = tab.z_at(hit);
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (at(mid) >= prob)
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

}  // namespace detail

/// Quantile of F_TW1.
inline double tw1_quantile(double prob) { return detail::first_crossing(prob, 0.0); }

/// Smallest z with corrected_cdf(z) >= prob, i.e. the inverse of the
/// monotone hull. Clamped to the table range.
inline double inverse_corrected_cdf(double prob, int u, int p) {
    return detail::first_crossing(prob, correction_weight(u, p));
}

/// Wishart parameters used for the q-th serial test.
inline std::pair<int, int> test_dimensions(int q, int n_r, int n_b) {
    return {4 * n_r - q + 1, n_b};
}

inline void check_false_alarm(double pr_f) {
    if (!(pr_f > 0.0 && pr_f < 0.5))
        throw ParameterError("false-alarm probability must lie in (0, 0.5)");
}

/// gamma_q = F^{-1}(1 - pr_f) xi + mu with (u, p) = (4 n_r - q + 1, n_b),
/// on the Wishart eigenvalue scale.
inline double threshold(int q, int n_r, int n_b, double pr_f) {
    check_false_alarm(pr_f);
    if (n_r < 1 || n_b < 2) throw ParameterError("need n_r >= 1 and n_b >= 2");
    if (q < 1 || q > 4 * n_r) throw ParameterError("test index out of range");
    const auto [u, p] = test_dimensions(q, n_r, n_b);
    const auto cs = centering_scaling(u, p);
    return inverse_corrected_cdf(1.0 - pr_f, u, p) * cs.xi + cs.mu;
}

/// Thresholds for q = 1 .. 4 n_r - 1, rescaled to the eigenvalue-ratio scale.
class ThresholdSet {
public:
    ThresholdSet(int n_r, int n_b, double pr_f) : n_r_(n_r), n_b_(n_b), pr_f_(pr_f) {
        check_false_alarm(pr_f);
        ratio_.reserve(static_cast<std::size_t>(4 * n_r - 1));
        for (int q = 1; q < 4 * n_r; ++q) ratio_.push_back(threshold(q, n_r, n_b, pr_f) / n_b);
    }

    /// gamma_q / n_b, comparable with U_q.
    double ratio(int q) const { return ratio_.at(static_cast<std::size_t>(q - 1)); }
    int count() const { return static_cast<int>(ratio_.size()); }
    int n_r() const { return n_r_; }
    int n_b() const { return n_b_; }
    double pr_f() const { return pr_f_; }

private:
    int n_r_;
    int n_b_;
    double pr_f_;
    std::vector<double> ratio_;
};

}  // namespace sfbcid::rmt
