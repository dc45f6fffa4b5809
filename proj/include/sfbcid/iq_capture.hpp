#pragma once

// SFBCIQ1 capture files: received time-domain samples for the identify path.
//
// Layout (all integers and floats little-endian):
//
//   offset  size  field
//        0     7  magic "SFBCIQ1"
//        7     1  0x00 (padding)
//        8     4  u32 n_fft
//       12     4  u32 cp_len
//       16     4  u32 n_rx
//       20     4  u32 n_symbols
//       24     8  f64 sample_rate (Hz, informational)
//       32     *  payload: n_rx * n_symbols * (n_fft + cp_len) complex samples,
//                 antenna-major then time, each as float32 I then float32 Q
//
// The payload starts at the first sample of the first cyclic prefix.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "sfbcid/types.hpp"
#include "sfbcid/waveform.hpp"

namespace sfbcid::iq {

inline constexpr char kMagic[8] = {'S', 'F', 'B', 'C', 'I', 'Q', '1', '\0'};
inline constexpr std::size_t kHeaderBytes = 32;

struct Capture {
    OfdmConfig cfg;
    double sample_rate = 1.92e6;
    CMatrix samples;  // n_rx x n_symbols * (n_fft + cp_len)
};

namespace detail {

inline void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

inline void put_u64(std::vector<unsigned char>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

inline std::uint32_t get_u32(const unsigned char* p) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    return v;
}

inline std::uint64_t get_u64(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}

}  // namespace detail

inline std::vector<unsigned char> encode(const Capture& c) {
    const auto& cfg = c.cfg;
    if (c.samples.rows() != cfg.n_rx || c.samples.cols() != cfg.stream_len())
        throw DimensionError("capture samples do not match the header dimensions");
    std::vector<unsigned char> out(kMagic, kMagic + 8);
    out.reserve(kHeaderBytes + static_cast<std::size_t>(c.samples.size()) * 8);
    detail::put_u32(out, static_cast<std::uint32_t>(cfg.n_fft));
    detail::put_u32(out, static_cast<std::uint32_t>(cfg.cp_len));
    detail::put_u32(out, static_cast<std::uint32_t>(cfg.n_rx));
    detail::put_u32(out, static_cast<std::uint32_t>(cfg.n_symbols));
    detail::put_u64(out, std::bit_cast<std::uint64_t>(c.sample_rate));
    for (int r = 0; r < c.samples.rows(); ++r)
        for (int n = 0; n < c.samples.cols(); ++n) {
            detail::put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(c.samples(r, n).real())));
            detail::put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(c.samples(r, n).imag())));
        }
    return out;
}

inline Capture decode(const std::vector<unsigned char>& bytes) {
    if (bytes.size() < kHeaderBytes) throw FormatError("capture shorter than its 32-byte header");
    if (std::memcmp(bytes.data(), kMagic, 8) != 0) throw FormatError("bad magic: not an SFBCIQ1 capture");
    const unsigned char* p = bytes.data();
    Capture c;
    c.cfg.n_fft = static_cast<int>(detail::get_u32(p + 8));
    c.cfg.cp_len = static_cast<int>(detail::get_u32(p + 12));
    c.cfg.n_rx = static_cast<int>(detail::get_u32(p + 16));
    c.cfg.n_symbols = static_cast<int>(detail::get_u32(p + 20));
    c.sample_rate = std::bit_cast<double>(detail::get_u64(p + 24));

    if (c.cfg.n_rx <= 3)
        throw FormatError("capture has " + std::to_string(c.cfg.n_rx) +
                          " receive antennas; the code pool needs more than 3");
    try {
        c.cfg.validate();
    } catch (const ConfigError& e) {
        throw FormatError(std::string("invalid capture header: ") + e.what());
    }

    const std::size_t count = static_cast<std::size_t>(c.cfg.n_rx) *
                              static_cast<std::size_t>(c.cfg.stream_len());
    const std::size_t expected = kHeaderBytes + count * 8;
    if (bytes.size() != expected)
        throw FormatError("payload length mismatch: expected " + std::to_string(expected - kHeaderBytes) +
                          " bytes, found " + std::to_string(bytes.size() - kHeaderBytes));

    c.samples.resize(c.cfg.n_rx, c.cfg.stream_len());
    const unsigned char* s = p + kHeaderBytes;
    for (int r = 0; r < c.cfg.n_rx; ++r)
        for (int n = 0; n < c.cfg.stream_len(); ++n, s += 8)
            c.samples(r, n) = {std::bit_cast<float>(detail::get_u32(s)),
                               std::bit_cast<float>(detail::get_u32(s + 4))};
    return c;
}

inline void write(const std::string& path, const Capture& c) {
    const auto bytes = encode(c);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot open " + path + " for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw FormatError("short write to " + path);
}

inline Capture read(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot open " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return decode(bytes);
}

}  // namespace sfbcid::iq
