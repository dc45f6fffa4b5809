#pragma once

// SFBC-OFDM transmitter, frequency-selective MIMO channel, impairments and
// OFDM demodulator.
//
// Conventions
//   * Subcarrier k (1-based) is DFT bin k-1.
//   * Both DFT directions are unitary, so a white time-domain noise of
//     variance s2 per complex sample is white with variance s2 per subcarrier.
//   * SNR is the average received signal power per receive antenna over the
//     noise power per receive antenna, averaged over channel draws:
//         snr = (sum_t E|h_t|^2) * E_s / noise_var
//     with E_s the expected per-subcarrier transmit energy summed over
//     antennas (codeword zeros carry none).
//   * Doppler uses a 16-oscillator sum-of-sinusoids per tap whose value at
//     sample 0 is the drawn static tap, so f_d = 0 reduces to block fading.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "sfbcid/codebook.hpp"
#include "sfbcid/random.hpp"
#include "sfbcid/types.hpp"

namespace sfbcid {

// ---------------------------------------------------------------------------
// Modulation

struct Modulation {
    enum class Kind { psk, qam };
    Kind kind = Kind::psk;
    int order = 4;

    std::string name() const {
        return std::to_string(order) + (kind == Kind::psk ? "PSK" : "QAM");
    }
    bool operator==(const Modulation&) const = default;
};

inline Modulation parse_modulation(std::string_view text) {
    std::string s(text);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "qpsk") return {Modulation::Kind::psk, 4};
    if (s == "bpsk") return {Modulation::Kind::psk, 2};
    Modulation m;
    std::size_t digits = 0;
    while (digits < s.size() && std::isdigit(static_cast<unsigned char>(s[digits]))) ++digits;
    const std::string suffix = s.substr(digits);
    if (digits == 0 || (suffix != "psk" && suffix != "qam"))
        throw ConfigError("unknown modulation '" + std::string(text) + "'");
    m.order = std::stoi(s.substr(0, digits));
    m.kind = suffix == "psk" ? Modulation::Kind::psk : Modulation::Kind::qam;
    return m;
}

/// Unit-average-energy constellation. Real-valued alphabets (M < 4) are
/// rejected: stacking real and imaginary parts needs a complex signal.
inline std::vector<cplx> constellation(const Modulation& m) {
    if (m.order < 4)
        throw ConfigError("modulation " + m.name() +
                          " is real-valued; identification needs M >= 4");
    std::vector<cplx> points;
    if (m.kind == Modulation::Kind::psk) {
        for (int i = 0; i < m.order; ++i) points.push_back(std::polar(1.0, 2.0 * kPi * (i + 0.5) / m.order));
        return points;
    }
    const int side = static_cast<int>(std::lround(std::sqrt(m.order)));
    if (side * side != m.order) throw ConfigError("only square QAM is supported: " + m.name());
    double energy = 0.0;
    for (int i = 0; i < side; ++i)
        for (int j = 0; j < side; ++j) {
            const cplx p(2.0 * i - side + 1, 2.0 * j - side + 1);
            points.push_back(p);
            energy += std::norm(p);
        }
    const double scale = 1.0 / std::sqrt(energy / m.order);
    for (auto& p : points) p *= scale;
    return points;
}

// ---------------------------------------------------------------------------
// Configuration

struct OfdmConfig {
    int n_fft = 128;
    int cp_len = 10;
    int n_rx = 8;
    int n_symbols = 100;

    int symbol_len() const { return n_fft + cp_len; }
    int stream_len() const { return n_symbols * symbol_len(); }

    /// Checks the invariants; max_nt is the largest antenna count that will
    /// be observed (pass 0 to skip the receive-antenna check).
    void validate(int max_nt = 0) const {
        if (n_fft < 8 || (n_fft & (n_fft - 1)) != 0)
            throw ConfigError("n_fft must be a power of two >= 8");
        if (cp_len < 0 || cp_len >= n_fft) throw ConfigError("cp_len must lie in [0, n_fft)");
        if (n_symbols < 2) throw ConfigError("need at least two OFDM symbols");
        if (n_rx < 1) throw ConfigError("need at least one receive antenna");
        if (max_nt > 0 && n_rx <= max_nt)
            throw ConfigError("need more receive antennas (" + std::to_string(n_rx) +
                              ") than transmit antennas (" + std::to_string(max_nt) + ")");
    }
};

/// Exponential power delay profile E|h_t|^2 = exp(-t / decay), t = 0..taps-1.
struct ChannelProfile {
    int taps = 6;
    double decay = 5.0;

    double tap_power(int t) const { return std::exp(-t / decay); }
    double total_power() const {
        double p = 0.0;
        for (int t = 0; t < taps; ++t) p += tap_power(t);
        return p;
    }
};

struct Impairments {
    int sto = 0;          // FFT window offset in samples; negative = early
    double cfo = 0.0;     // carrier offset as a fraction of the subcarrier spacing
    double doppler = 0.0; // maximum Doppler frequency over the sampling rate

    bool operator==(const Impairments&) const = default;
};

// ---------------------------------------------------------------------------
// Channel

struct ChannelRealization {
    std::vector<CMatrix> taps;           // per delay: n_rx x n_t
    std::vector<CMatrix> freq_response;  // per subcarrier k = 1..N (index k-1): n_rx x n_t

    int n_rx() const { return static_cast<int>(taps.front().rows()); }
    int n_t() const { return static_cast<int>(taps.front().cols()); }
    int length() const { return static_cast<int>(taps.size()); }
};

inline std::vector<CMatrix> frequency_response(const std::vector<CMatrix>& taps, int n_fft) {
    std::vector<CMatrix> h(static_cast<std::size_t>(n_fft));
    for (int k = 0; k < n_fft; ++k) {
        CMatrix acc = CMatrix::Zero(taps.front().rows(), taps.front().cols());
        for (int t = 0; t < static_cast<int>(taps.size()); ++t)
            acc += std::polar(1.0, -2.0 * kPi * k * t / n_fft) * taps[static_cast<std::size_t>(t)];
        h[static_cast<std::size_t>(k)] = std::move(acc);
    }
    return h;
}

inline bool full_column_rank(const CMatrix& h) {
    Eigen::JacobiSVD<CMatrix> svd(h);
    const auto& s = svd.singularValues();
    return s.size() > 0 && s(s.size() - 1) > 1e-10 * s(0);
}

template <class Rng>
ChannelRealization draw_channel(const OfdmConfig& cfg, int n_t, Rng& rng,
                                const ChannelProfile& profile = {}) {
    if (profile.taps < 1) throw ConfigError("channel needs at least one tap");
    ChannelRealization ch;
    for (;;) {
        ch.taps.assign(static_cast<std::size_t>(profile.taps), CMatrix(cfg.n_rx, n_t));
        for (int t = 0; t < profile.taps; ++t)
            for (int j = 0; j < n_t; ++j)
                for (int i = 0; i < cfg.n_rx; ++i)
                    ch.taps[static_cast<std::size_t>(t)](i, j) =
                        complex_gaussian(rng, profile.tap_power(t));
        ch.freq_response = frequency_response(ch.taps, cfg.n_fft);
        if (std::all_of(ch.freq_response.begin(), ch.freq_response.end(), full_column_rank))
            return ch;
    }
}

// ---------------------------------------------------------------------------
// FFT helpers (unitary)

namespace detail {

inline Eigen::FFT<double>& fft_engine() {
    thread_local Eigen::FFT<double> engine;
    return engine;
}

inline std::vector<cplx> unitary_fft(const std::vector<cplx>& in) {
    std::vector<cplx> out;
    fft_engine().fwd(out, in);
    const double s = 1.0 / std::sqrt(static_cast<double>(in.size()));
    for (auto& v : out) v *= s;
    return out;
}

inline std::vector<cplx> unitary_ifft(const std::vector<cplx>& in) {
    std::vector<cplx> out;
    fft_engine().inv(out, in);  // includes 1/N
    const double s = std::sqrt(static_cast<double>(in.size()));
    for (auto& v : out) v *= s;
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Transmitter

struct TransmitBurst {
    Scheme scheme;
    CMatrix samples;             // n_t x n_symbols * (n_fft + cp_len)
    std::vector<CMatrix> grids;  // per OFDM symbol: n_t x n_fft frequency grid
};

/// OFDM-modulate one frequency grid (n_t x N) into n_t x (N + cp) samples.
inline CMatrix ofdm_modulate(const CMatrix& grid, int cp_len) {
    const int n = static_cast<int>(grid.cols());
    CMatrix out(grid.rows(), n + cp_len);
    std::vector<cplx> row(static_cast<std::size_t>(n));
    for (int v = 0; v < grid.rows(); ++v) {
        for (int k = 0; k < n; ++k) row[static_cast<std::size_t>(k)] = grid(v, k);
        const auto time = detail::unitary_ifft(row);
        for (int i = 0; i < cp_len; ++i) out(v, i) = time[static_cast<std::size_t>(n - cp_len + i)];
        for (int i = 0; i < n; ++i) out(v, cp_len + i) = time[static_cast<std::size_t>(i)];
    }
    return out;
}

template <class Rng>
TransmitBurst transmit(Scheme scheme, const OfdmConfig& cfg, const Modulation& mod, Rng& rng) {
    cfg.validate();
    require_divisible(scheme, cfg.n_fft);
    const auto points = constellation(mod);
    const auto sh = shape(scheme);
    const int per_symbol = cfg.n_fft / sh.l * sh.n_s;

    TransmitBurst burst{scheme, CMatrix(sh.n_t, cfg.stream_len()), {}};
    burst.grids.reserve(static_cast<std::size_t>(cfg.n_symbols));
    std::uniform_int_distribution<int> pick(0, static_cast<int>(points.size()) - 1);
    std::vector<cplx> data(static_cast<std::size_t>(per_symbol));
    for (int n = 0; n < cfg.n_symbols; ++n) {
        for (auto& d : data) d = points[static_cast<std::size_t>(pick(rng))];
        CMatrix grid = layout_symbol(scheme, cfg.n_fft, data);
        burst.samples.middleCols(n * cfg.symbol_len(), cfg.symbol_len()) =
            ofdm_modulate(grid, cfg.cp_len);
        burst.grids.push_back(std::move(grid));
    }
    return burst;
}

// ---------------------------------------------------------------------------
// Receiver side

/// What the detector sees: per OFDM symbol an n_rx x n_fft matrix whose
/// column k-1 is y_k(n).
struct FrequencyGrid {
    int n_fft = 0;
    int n_rx = 0;
    std::vector<CMatrix> symbols;

    int n_symbols() const { return static_cast<int>(symbols.size()); }
    auto y(int n, int k) const { return symbols[static_cast<std::size_t>(n)].col(k - 1); }

    void scale(double alpha) {
        for (auto& s : symbols) s *= alpha;
    }
};

/// Demodulated observation plus the ground-truth noise variance. The noise
/// variance is for diagnostics only; detector entry points take the
/// FrequencyGrid.
struct ReceivedGrid {
    FrequencyGrid grid;
    double noise_var = 0.0;
};

struct ReceivedStream {
    CMatrix samples;  // n_rx x stream length (channel tail truncated)
    double noise_var = 0.0;
};

/// Noise variance that realises snr_db for the given scheme and profile.
inline double noise_variance(Scheme scheme, double snr_db, const ChannelProfile& profile) {
    return profile.total_power() * mean_subcarrier_energy(scheme) / std::pow(10.0, snr_db / 10.0);
}

namespace detail {

/// Sum-of-sinusoids trajectory of one tap, pinned to h0 at sample 0.
template <class Rng>
std::vector<cplx> doppler_trajectory(cplx h0, double power, double fd, int len, Rng& rng) {
    constexpr int kOscillators = 16;
    std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);
    std::array<cplx, kOscillators> amp;
    std::array<cplx, kOscillators> rot;
    cplx sum{0.0, 0.0};
    for (int m = 0; m < kOscillators; ++m) {
        amp[m] = complex_gaussian(rng, power / kOscillators);
        sum += amp[m];
        rot[m] = std::polar(1.0, 2.0 * kPi * fd * std::cos(angle(rng)));
    }
    // Conditioning iid amplitudes on their sum keeps each marginal Gaussian.
    for (auto& a : amp) a += (h0 - sum) / static_cast<double>(kOscillators);
    std::vector<cplx> out(static_cast<std::size_t>(len));
    for (int n = 0; n < len; ++n) {
        cplx v{0.0, 0.0};
        for (int m = 0; m < kOscillators; ++m) {
            v += amp[m];
            amp[m] *= rot[m];
        }
        out[static_cast<std::size_t>(n)] = v;
    }
    return out;
}

}  // namespace detail

/// Channel, impairments and AWGN in the time domain.
template <class Rng>
ReceivedStream channel_output(const TransmitBurst& tx, const ChannelRealization& ch,
                              const OfdmConfig& cfg, double snr_db, const Impairments& imp,
                              Rng& rng, const ChannelProfile& profile = {}) {
    const int len = static_cast<int>(tx.samples.cols());
    const int n_t = static_cast<int>(tx.samples.rows());
    if (len != cfg.stream_len() || ch.n_t() != n_t || ch.n_rx() != cfg.n_rx)
        throw DimensionError("transmit burst and channel do not match the configuration");

    ReceivedStream rx{CMatrix::Zero(cfg.n_rx, len), noise_variance(tx.scheme, snr_db, profile)};
    if (imp.doppler == 0.0) {
        for (int t = 0; t < ch.length(); ++t) {
            if (t >= len) break;
            rx.samples.rightCols(len - t).noalias() +=
                ch.taps[static_cast<std::size_t>(t)] * tx.samples.leftCols(len - t);
        }
    } else {
        for (int t = 0; t < ch.length(); ++t)
            for (int j = 0; j < n_t; ++j)
                for (int i = 0; i < cfg.n_rx; ++i) {
                    const auto path = detail::doppler_trajectory(
                        ch.taps[static_cast<std::size_t>(t)](i, j), profile.tap_power(t),
                        imp.doppler, len, rng);
                    for (int n = t; n < len; ++n)
                        rx.samples(i, n) += path[static_cast<std::size_t>(n)] * tx.samples(j, n - t);
                }
    }
    if (imp.cfo != 0.0) {
        for (int n = 0; n < len; ++n)
            rx.samples.col(n) *= std::polar(1.0, 2.0 * kPi * imp.cfo * n / cfg.n_fft);
    }
    if (rx.noise_var > 0.0) {
        for (int n = 0; n < len; ++n)
            for (int i = 0; i < cfg.n_rx; ++i) rx.samples(i, n) += complex_gaussian(rng, rx.noise_var);
    }
    return rx;
}

/// CP removal and unitary N-point DFT with the window shifted by sto samples.
/// Samples outside the stream read as zero (silence around the burst).
inline FrequencyGrid demodulate(const CMatrix& samples, const OfdmConfig& cfg, int sto = 0) {
    if (std::abs(sto) >= cfg.cp_len + cfg.n_fft)
        throw WindowError("timing offset " + std::to_string(sto) +
                          " moves the FFT window beyond a whole symbol");
    if (samples.rows() != cfg.n_rx) throw DimensionError("stream has the wrong antenna count");
    const int len = static_cast<int>(samples.cols());
    const int symbols = len / cfg.symbol_len();
    FrequencyGrid g{cfg.n_fft, cfg.n_rx, {}};
    g.symbols.reserve(static_cast<std::size_t>(symbols));
    std::vector<cplx> window(static_cast<std::size_t>(cfg.n_fft));
    for (int n = 0; n < symbols; ++n) {
        const int start = n * cfg.symbol_len() + cfg.cp_len + sto;
        CMatrix y(cfg.n_rx, cfg.n_fft);
        for (int r = 0; r < cfg.n_rx; ++r) {
            for (int i = 0; i < cfg.n_fft; ++i) {
                const int s = start + i;
                window[static_cast<std::size_t>(i)] = (s >= 0 && s < len) ? samples(r, s) : cplx{};
            }
            const auto spec = detail::unitary_fft(window);
            for (int k = 0; k < cfg.n_fft; ++k) y(r, k) = spec[static_cast<std::size_t>(k)];
        }
        g.symbols.push_back(std::move(y));
    }
    return g;
}

template <class Rng>
ReceivedGrid propagate(const TransmitBurst& tx, const ChannelRealization& ch,
                       const OfdmConfig& cfg, double snr_db, const Impairments& imp, Rng& rng,
                       const ChannelProfile& profile = {}) {
    auto stream = channel_output(tx, ch, cfg, snr_db, imp, rng, profile);
    return {demodulate(stream.samples, cfg, imp.sto), stream.noise_var};
}

/// Pure white noise observation (signal off). Generated directly in the
/// frequency domain, which is equivalent under the unitary DFT.
template <class Rng>
FrequencyGrid noise_grid(const OfdmConfig& cfg, double noise_var, Rng& rng) {
    FrequencyGrid g{cfg.n_fft, cfg.n_rx, {}};
    for (int n = 0; n < cfg.n_symbols; ++n) {
        CMatrix y(cfg.n_rx, cfg.n_fft);
        for (int k = 0; k < cfg.n_fft; ++k)
            for (int r = 0; r < cfg.n_rx; ++r) y(r, k) = complex_gaussian(rng, noise_var);
        g.symbols.push_back(std::move(y));
    }
    return g;
}

}  // namespace sfbcid
