#pragma once

// Per-pair real-valued observation, its sample covariance, the ordered
// eigenvalues and the eigenvalue-ratio test statistics.
//
// Stacking order of one pair (k, k+1), length 4 n_rx:
//     [ Re y_k ; Im y_k ; Re y_{k+1} ; Im y_{k+1} ]
// i.e. the column-major vectorisation of [Re Y_k; Im Y_k] with
// Y_k = [y_k, y_{k+1}].

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "sfbcid/types.hpp"
#include "sfbcid/waveform.hpp"

namespace sfbcid::subspace {

inline void check_pair(const FrequencyGrid& g, int k) {
    if (k < 1 || k > g.n_fft - 1)
        throw ParameterError("pair index " + std::to_string(k) + " outside 1.." +
                             std::to_string(g.n_fft - 1));
}

/// Writes the stacked vector of pair k, symbol n into out (length 4 n_rx).
template <class Out>
void stack_into(const FrequencyGrid& g, int k, int n, Out&& out) {
    const int r = g.n_rx;
    const auto a = g.y(n, k);
    const auto b = g.y(n, k + 1);
    out.segment(0, r) = a.real();
    out.segment(r, r) = a.imag();
    out.segment(2 * r, r) = b.real();
    out.segment(3 * r, r) = b.imag();
}

inline RVector stack(const FrequencyGrid& g, int k, int n) {
    check_pair(g, k);
    if (n < 0 || n >= g.n_symbols()) throw ParameterError("symbol index out of range");
    RVector v(4 * g.n_rx);
    stack_into(g, k, n, v);
    return v;
}

/// Inverse of stack: rebuilds [y_k, y_{k+1}] from the real vector.
inline CMatrix unstack(const RVector& v) {
    const int r = static_cast<int>(v.size()) / 4;
    CMatrix y(r, 2);
    for (int i = 0; i < r; ++i) {
        y(i, 0) = {v(i), v(r + i)};
        y(i, 1) = {v(2 * r + i), v(3 * r + i)};
    }
    return y;
}

struct PairCovariance {
    RMatrix r;
    RVector eigs;  // descending
};

/// Descending eigenvalues of a symmetric matrix (lower triangle is read).
inline RVector descending_eigenvalues(const RMatrix& sym) {
    Eigen::SelfAdjointEigenSolver<RMatrix> solver(sym, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw Error("symmetric eigensolver did not converge");
    return solver.eigenvalues().reverse();
}

/// R_k = (1/N_b) sum_n y~_k(n) y~_k(n)^T, no mean removal.
inline PairCovariance pair_covariance(const FrequencyGrid& g, int k) {
    check_pair(g, k);
    const int nb = g.n_symbols();
    if (nb < 2) throw ParameterError("need at least two OFDM symbols");
    RMatrix x(4 * g.n_rx, nb);
    for (int n = 0; n < nb; ++n) stack_into(g, k, n, x.col(n));
    PairCovariance c;
    c.r = RMatrix::Zero(x.rows(), x.rows());
    c.r.selfadjointView<Eigen::Lower>().rankUpdate(x, 1.0 / nb);
    c.r = c.r.selfadjointView<Eigen::Lower>();
    c.eigs = descending_eigenvalues(c.r);
    return c;
}

struct TestStatistics {
    std::vector<double> u;  // u[q-1] = U_q for q = 1 .. 4 n_rx - 1

    double at(int q) const { return u.at(static_cast<std::size_t>(q - 1)); }
    int count() const { return static_cast<int>(u.size()); }
};

/// U_q = l_q / mean(l_q .. l_last). Eigenvalues below the numerical floor
/// (size * eps * l_1) count as zero; an all-zero tail set is a set of equal
/// eigenvalues and yields U_q = 1.
inline TestStatistics statistics(const RVector& eigs) {
    const int d = static_cast<int>(eigs.size());
    if (d < 2) throw DimensionError("need at least two eigenvalues");
    const double lead = eigs(0);
    if (!(lead > 0.0)) throw StatisticError("all eigenvalues are zero; statistic undefined");
    const double floor = d * std::numeric_limits<double>::epsilon() * lead;
    std::vector<double> l(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) l[static_cast<std::size_t>(i)] = eigs(i) > floor ? eigs(i) : 0.0;

    TestStatistics t;
    t.u.resize(static_cast<std::size_t>(d - 1));
    double tail = 0.0;  // running sum l_q + ... + l_d, built from the back
    std::vector<double> suffix(static_cast<std::size_t>(d + 1), 0.0);
    for (int i = d - 1; i >= 0; --i) {
        tail += l[static_cast<std::size_t>(i)];
        suffix[static_cast<std::size_t>(i)] = tail;
    }
    for (int q = 1; q < d; ++q) {
        const double mean = suffix[static_cast<std::size_t>(q - 1)] / (d - q + 1);
        t.u[static_cast<std::size_t>(q - 1)] = mean > 0.0 ? l[static_cast<std::size_t>(q - 1)] / mean : 1.0;
    }
    return t;
}

inline TestStatistics statistics(const PairCovariance& cov) { return statistics(cov.eigs); }

/// Exact pair covariance of a flat channel H (n_rx x n_t) carrying a code
/// whose pair generator is m (4 n_t x 2 m_k), with unit-energy symbols:
///     0.5 (I2 (x) Hbar) M M^T (I2 (x) Hbar)^T + (noise_var / 2) I
inline RMatrix exact_pair_covariance(const CMatrix& h, const RMatrix& m, double noise_var) {
    const int r = static_cast<int>(h.rows());
    const int t = static_cast<int>(h.cols());
    RMatrix hbar(2 * r, 2 * t);
    hbar << h.real(), -h.imag(), h.imag(), h.real();
    RMatrix big = RMatrix::Zero(4 * r, 4 * t);
    big.topLeftCorner(2 * r, 2 * t) = hbar;
    big.bottomRightCorner(2 * r, 2 * t) = hbar;
    const RMatrix gm = big * m;
    RMatrix sigma = 0.5 * gm * gm.transpose();
    sigma.diagonal().array() += noise_var / 2.0;
    return sigma;
}

}  // namespace sfbcid::subspace
