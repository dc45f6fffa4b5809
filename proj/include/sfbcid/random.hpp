#pragma once

// Counter-based random streams.
//
// Every Monte Carlo trial draws from its own Philox4x32-10 stream. The
// 64-bit key is the master seed; the upper three counter words hold the
// trial coordinates (sweep point, scheme, trial, purpose) and the lowest word
// enumerates blocks inside the stream. Two different coordinate tuples can
// never produce the same (key, counter) input, so their streams are disjoint,
// and any single trial can be regenerated without replaying the others.

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <random>

namespace sfbcid {

class Philox4x32 {
public:
    using result_type = std::uint32_t;
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    Philox4x32() = default;
    Philox4x32(Key key, Counter base) : key_(key), counter_(base) {}

    /// Raw block function, exposed for known-answer tests.
    static Counter block(Counter ctr, Key key) {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kWeyl0;
                key[1] += kWeyl1;
            }
            const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
                   static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
                   static_cast<std::uint32_t>(p0)};
        }
        return ctr;
    }

    result_type operator()() {
        if (index_ == 4) {
            buffer_ = block(counter_, key_);
            ++counter_[0];
            index_ = 0;
        }
        return buffer_[index_++];
    }

    void discard(unsigned long long n) {
        while (n-- > 0) (*this)();
    }

private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

    Key key_{};
    Counter counter_{};
    Counter buffer_{};
    int index_ = 4;
};

/// What a stream is used for; keeps calibration draws apart from trial draws.
enum class StreamPurpose : std::uint16_t { trial = 0, noise_calibration = 1, test = 2 };

/// Coordinates of one reproducible unit of work.
struct StreamKey {
    std::uint64_t seed = 0;
    std::uint32_t sweep = 0;
    std::uint16_t scheme = 0;
    std::uint32_t trial = 0;
    StreamPurpose purpose = StreamPurpose::trial;
};

inline Philox4x32 make_stream(const StreamKey& k) {
    const Philox4x32::Key key{static_cast<std::uint32_t>(k.seed),
                              static_cast<std::uint32_t>(k.seed >> 32)};
    const Philox4x32::Counter base{
        0u, k.trial,
        static_cast<std::uint32_t>(k.scheme) |
            (static_cast<std::uint32_t>(k.purpose) << 16),
        k.sweep};
    return Philox4x32(key, base);
}

/// Circularly-symmetric complex Gaussian with E|z|^2 = variance.
template <class Rng>
std::complex<double> complex_gaussian(Rng& rng, double variance) {
    std::normal_distribution<double> normal(0.0, 1.0);
    const double s = std::sqrt(variance / 2.0);
    const double re = normal(rng);
    const double im = normal(rng);
    return {s * re, s * im};
}

}  // namespace sfbcid
