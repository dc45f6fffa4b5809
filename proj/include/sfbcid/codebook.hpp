#pragma once

// The seven space-frequency block codes of the identification pool, their
// codeword matrices, the per-OFDM-symbol subcarrier layout, and the
// signal-subspace dimension each code produces on every adjacent-subcarrier
// pair (the feature template the classifier compares against).
//
// Subcarrier pairs are 1-based: pair k covers subcarriers k and k+1, and the
// first codeword starts on subcarrier 1.

#include <algorithm>
#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sfbcid/types.hpp"

namespace sfbcid {

enum class Scheme { SA, SM2, SM3, AL, SFBC1, SFBC2, SFBC3 };

inline constexpr std::array<Scheme, 7> kAllSchemes{Scheme::SA,    Scheme::SM2,   Scheme::SM3,
                                                   Scheme::AL,    Scheme::SFBC1, Scheme::SFBC2,
                                                   Scheme::SFBC3};

/// Structural constants: antennas, symbols per codeword, subcarriers per codeword.
struct SchemeShape {
    int n_t;
    int n_s;
    int l;
};

inline constexpr SchemeShape shape(Scheme s) {
    switch (s) {
        case Scheme::SA: return {1, 1, 1};
        case Scheme::SM2: return {2, 2, 1};
        case Scheme::SM3: return {3, 3, 1};
        case Scheme::AL: return {2, 2, 2};
        case Scheme::SFBC1: return {3, 4, 8};
        case Scheme::SFBC2: return {3, 3, 4};
        case Scheme::SFBC3: return {3, 3, 4};
    }
    return {0, 0, 0};
}

inline constexpr std::string_view to_string(Scheme s) {
    switch (s) {
        case Scheme::SA: return "SA";
        case Scheme::SM2: return "SM2";
        case Scheme::SM3: return "SM3";
        case Scheme::AL: return "AL";
        case Scheme::SFBC1: return "SFBC1";
        case Scheme::SFBC2: return "SFBC2";
        case Scheme::SFBC3: return "SFBC3";
    }
    return "?";
}

inline std::optional<Scheme> parse_scheme(std::string_view name) {
    for (Scheme s : kAllSchemes)
        if (to_string(s) == name) return s;
    return std::nullopt;
}

inline int index_of(Scheme s) { return static_cast<int>(s); }

/// One codeword cell: sign * x[symbol] (conjugated if conj), or zero when symbol < 0.
struct CodeEntry {
    int symbol = -1;
    int sign = 1;
    bool conj = false;

    bool is_zero() const { return symbol < 0; }
};

namespace detail {

constexpr CodeEntry x(int i) { return {i, 1, false}; }
constexpr CodeEntry nx(int i) { return {i, -1, false}; }
constexpr CodeEntry xc(int i) { return {i, 1, true}; }
constexpr CodeEntry nxc(int i) { return {i, -1, true}; }
constexpr CodeEntry zero() { return {}; }

}  // namespace detail

/// Symbolic codeword: n_t rows (transmit antennas) by l columns (subcarriers).
using CodePattern = std::vector<std::vector<CodeEntry>>;

inline CodePattern pattern(Scheme s) {
    using namespace detail;
    switch (s) {
        case Scheme::SA: return {{x(0)}};
        case Scheme::SM2: return {{x(0)}, {x(1)}};
        case Scheme::SM3: return {{x(0)}, {x(1)}, {x(2)}};
        case Scheme::AL: return {{x(0), x(1)}, {nxc(1), xc(0)}};
        case Scheme::SFBC1:
            // Rate-1/2 orthogonal design for three antennas; each row repeats
            // its first four entries conjugated.
            return {{x(0), nx(1), nx(2), nx(3), xc(0), nxc(1), nxc(2), nxc(3)},
                    {x(1), x(0), x(3), nx(2), xc(1), xc(0), xc(3), nxc(2)},
                    {x(2), nx(3), x(0), x(1), xc(2), nxc(3), xc(0), xc(1)}};
        case Scheme::SFBC2:
            return {{x(0), zero(), x(1), nx(2)},
                    {zero(), x(0), xc(2), xc(1)},
                    {nxc(1), nx(2), xc(0), zero()}};
        case Scheme::SFBC3:
            return {{x(0), nxc(1), xc(2), zero()},
                    {x(1), xc(0), zero(), nxc(2)},
                    {x(2), zero(), nxc(0), xc(1)}};
    }
    return {};
}

inline cplx evaluate(const CodeEntry& e, std::span<const cplx> symbols) {
    if (e.is_zero()) return {0.0, 0.0};
    const cplx v = e.conj ? std::conj(symbols[e.symbol]) : symbols[e.symbol];
    return static_cast<double>(e.sign) * v;
}

/// Codeword matrix C(x) for one block of n_s symbols.
inline CMatrix codeword(Scheme s, std::span<const cplx> symbols) {
    const auto sh = shape(s);
    if (static_cast<int>(symbols.size()) != sh.n_s)
        throw DimensionError(std::string(to_string(s)) + " codeword needs " +
                             std::to_string(sh.n_s) + " symbols, got " +
                             std::to_string(symbols.size()));
    const auto pat = pattern(s);
    CMatrix c(sh.n_t, sh.l);
    for (int v = 0; v < sh.n_t; ++v)
        for (int j = 0; j < sh.l; ++j) c(v, j) = evaluate(pat[v][j], symbols);
    return c;
}

/// Expected per-subcarrier transmit energy summed over antennas, for
/// unit-energy symbols (zeros in the codeword carry no energy).
inline double mean_subcarrier_energy(Scheme s) {
    const auto sh = shape(s);
    int nonzero = 0;
    for (const auto& row : pattern(s))
        for (const auto& e : row) nonzero += e.is_zero() ? 0 : 1;
    return static_cast<double>(nonzero) / sh.l;
}

inline void require_divisible(Scheme s, int n_fft) {
    if (n_fft <= 0 || n_fft % shape(s).l != 0)
        throw ConfigError("FFT size " + std::to_string(n_fft) + " is not a multiple of the " +
                          std::string(to_string(s)) + " code length " +
                          std::to_string(shape(s).l));
}

/// Lay N/l consecutive codewords across the N subcarriers of one OFDM
/// symbol. Row v of the result feeds transmit antenna v.
inline CMatrix layout_symbol(Scheme s, int n_fft, std::span<const cplx> data) {
    require_divisible(s, n_fft);
    const auto sh = shape(s);
    const int blocks = n_fft / sh.l;
    if (static_cast<int>(data.size()) != blocks * sh.n_s)
        throw DimensionError("layout needs " + std::to_string(blocks * sh.n_s) +
                             " symbols, got " + std::to_string(data.size()));
    CMatrix grid(sh.n_t, n_fft);
    for (int b = 0; b < blocks; ++b)
        grid.middleCols(b * sh.l, sh.l) = codeword(s, data.subspan(b * sh.n_s, sh.n_s));
    return grid;
}

/// Linear description of the transmitted pair (s_k, s_{k+1}) in terms of the
/// real and imaginary parts of the independent symbols it carries:
/// s_k = a1 * xt, s_{k+1} = a2 * xt with xt = [Re(xbar); Im(xbar)].
struct GeneratorMatrices {
    CMatrix a1;
    CMatrix a2;
    RMatrix m;  // [Re a1; Im a1; Re a2; Im a2], 4 n_t x 2 m_k
    /// (codeword block relative to the pair's first block, symbol index) per xbar entry.
    std::vector<std::pair<int, int>> symbols;

    int dimension() const { return static_cast<int>(a1.cols()); }
};

inline GeneratorMatrices generator_matrices(Scheme s, int k) {
    if (k < 1) throw ParameterError("pair index must be >= 1");
    const auto sh = shape(s);
    const auto pat = pattern(s);

    // 0-based subcarrier of each column and its (block, column-in-codeword).
    const int sc[2] = {k - 1, k};
    const int first_block = sc[0] / sh.l;

    std::vector<std::pair<int, int>> symbols;
    for (int c : sc) {
        const int block = c / sh.l - first_block;
        for (int v = 0; v < sh.n_t; ++v) {
            const auto& e = pat[v][c % sh.l];
            if (e.is_zero()) continue;
            const std::pair<int, int> id{block, e.symbol};
            if (std::find(symbols.begin(), symbols.end(), id) == symbols.end())
                symbols.push_back(id);
        }
    }
    std::sort(symbols.begin(), symbols.end());
    const int m = static_cast<int>(symbols.size());

    GeneratorMatrices g;
    g.a1 = CMatrix::Zero(sh.n_t, 2 * m);
    g.a2 = CMatrix::Zero(sh.n_t, 2 * m);
    for (int side = 0; side < 2; ++side) {
        CMatrix& a = side == 0 ? g.a1 : g.a2;
        const int c = sc[side];
        const int block = c / sh.l - first_block;
        for (int v = 0; v < sh.n_t; ++v) {
            const auto& e = pat[v][c % sh.l];
            if (e.is_zero()) continue;
            const auto it = std::find(symbols.begin(), symbols.end(),
                                      std::pair<int, int>{block, e.symbol});
            const int p = static_cast<int>(it - symbols.begin());
            a(v, p) += static_cast<double>(e.sign);
            a(v, m + p) += cplx(0.0, e.conj ? -e.sign : e.sign);
        }
    }
    g.m.resize(4 * sh.n_t, 2 * m);
    g.m << g.a1.real(), g.a1.imag(), g.a2.real(), g.a2.imag();
    g.symbols = std::move(symbols);
    return g;
}

/// Signal-subspace dimension 2 m_k expected on every pair k = 1..n-1.
struct FeatureTemplate {
    Scheme scheme;
    std::vector<int> q;  // q[k-1] for pair k

    int at(int k) const { return q.at(static_cast<std::size_t>(k - 1)); }
};

inline FeatureTemplate feature_template(Scheme s, int n_fft) {
    require_divisible(s, n_fft);
    FeatureTemplate t{s, {}};
    t.q.reserve(static_cast<std::size_t>(n_fft - 1));
    const int period = shape(s).l;
    // The pattern repeats with the code length, so one period is enough.
    std::vector<int> one_period;
    for (int k = 1; k <= period; ++k) one_period.push_back(generator_matrices(s, k).dimension());
    for (int k = 1; k < n_fft; ++k) t.q.push_back(one_period[(k - 1) % period]);
    return t;
}

}  // namespace sfbcid
