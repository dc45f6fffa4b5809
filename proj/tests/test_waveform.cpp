#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "sfbcid/waveform.hpp"

using namespace sfbcid;

namespace {

Philox4x32 rng_for(std::uint32_t trial) { return make_stream({31, 0, 0, trial, StreamPurpose::test}); }

constexpr double kNoiseless = 400.0;  // dB; noise variance ~1e-40

}  // namespace

TEST(Modulation, ParsesNames) {
    EXPECT_EQ(parse_modulation("QPSK"), (Modulation{Modulation::Kind::psk, 4}));
    EXPECT_EQ(parse_modulation("16qam"), (Modulation{Modulation::Kind::qam, 16}));
    EXPECT_EQ(parse_modulation("8PSK").name(), "8PSK");
    EXPECT_THROW(parse_modulation("foo"), ConfigError);
}

TEST(Modulation, UnitEnergyConstellations) {
    for (const char* name : {"4PSK", "8PSK", "16QAM", "64QAM"}) {
        const auto pts = constellation(parse_modulation(name));
        const double e = std::accumulate(pts.begin(), pts.end(), 0.0,
                                         [](double a, cplx p) { return a + std::norm(p); }) / pts.size();
        EXPECT_NEAR(e, 1.0, 1e-12) << name;
    }
}

TEST(Modulation, RealAlphabetsAreRejected) {
    EXPECT_THROW(constellation(parse_modulation("BPSK")), ConfigError);
    EXPECT_THROW(constellation(Modulation{Modulation::Kind::qam, 8}), ConfigError);
}

TEST(Config, Validation) {
    OfdmConfig c;
    EXPECT_NO_THROW(c.validate(3));
    c.n_rx = 3;
    EXPECT_THROW(c.validate(3), ConfigError);
    c = {};
    c.n_fft = 100;
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Channel, SingleTapIsFlat) {
    auto g = rng_for(1);
    OfdmConfig cfg;
    const auto ch = draw_channel(cfg, 2, g, ChannelProfile{1, 5.0});
    for (int k = 1; k < cfg.n_fft; ++k) EXPECT_NEAR((ch.freq_response[k] - ch.freq_response[0]).norm(), 0.0, 1e-14);
}

TEST(Channel, PowerProfileMatchesExponentialDecay) {
    auto g = rng_for(2);
    OfdmConfig cfg;
    cfg.n_fft = 8;
    cfg.cp_len = 6;
    cfg.n_rx = 10;
    const ChannelProfile prof;
    std::vector<double> acc(static_cast<std::size_t>(prof.taps), 0.0);
    const int draws = 2000;  // x 10 x 3 gains per tap = 6e4 samples per tap
    for (int d = 0; d < draws; ++d) {
        const auto ch = draw_channel(cfg, 3, g, prof);
        for (int t = 0; t < prof.taps; ++t) acc[static_cast<std::size_t>(t)] += ch.taps[t].squaredNorm() / 30.0;
    }
    for (int t = 0; t < prof.taps; ++t)
        EXPECT_NEAR(acc[static_cast<std::size_t>(t)] / draws / std::exp(-t / 5.0), 1.0, 0.02) << "tap " << t;
}

TEST(Channel, AdjacentSubcarriersAreClose) {
    auto g = rng_for(3);
    OfdmConfig cfg;
    double dev = 0.0;
    int n = 0;
    for (int d = 0; d < 20; ++d) {
        const auto ch = draw_channel(cfg, 2, g);
        for (int k = 0; k + 1 < cfg.n_fft; ++k, ++n)
            dev += (ch.freq_response[k + 1] - ch.freq_response[k]).norm() / ch.freq_response[k].norm();
    }
    EXPECT_LT(dev / n, 0.2);
}

TEST(Transmit, CyclicPrefixCopiesTheSymbolTail) {
    auto g = rng_for(4);
    OfdmConfig cfg;
    cfg.n_symbols = 3;
    const auto tx = transmit(Scheme::AL, cfg, {}, g);
    for (int n = 0; n < cfg.n_symbols; ++n) {
        const int base = n * cfg.symbol_len();
        EXPECT_EQ((tx.samples.middleCols(base, cfg.cp_len) -
                   tx.samples.middleCols(base + cfg.n_fft, cfg.cp_len)).norm(), 0.0);
    }
}

TEST(Transmit, ConstantGridIsAnImpulse) {
    CMatrix grid = CMatrix::Constant(1, 16, cplx(1.0, 0.0));
    const CMatrix t = ofdm_modulate(grid, 4);
    EXPECT_NEAR(std::abs(t(0, 4) - 4.0), 0.0, 1e-12);  // sqrt(16) at sample 0
    for (int i = 5; i < 20; ++i) EXPECT_NEAR(std::abs(t(0, i)), 0.0, 1e-12);
}

TEST(Transmit, ActiveResourceElementsHaveUnitPower) {
    auto g = rng_for(5);
    OfdmConfig cfg;
    cfg.n_symbols = 80;
    for (const char* m : {"QPSK", "16QAM"}) {
        const auto tx = transmit(Scheme::SFBC2, cfg, parse_modulation(m), g);
        double p = 0.0;
        long n = 0;
        for (const auto& grid : tx.grids)
            for (int i = 0; i < grid.size(); ++i)
                if (std::abs(grid(i)) > 0.0) {
                    p += std::norm(grid(i));
                    ++n;
                }
        EXPECT_NEAR(p / n, 1.0, 0.01) << m;
    }
}

TEST(Transmit, RoundTripRecoversTheGrid) {
    auto g = rng_for(6);
    OfdmConfig cfg;
    cfg.n_symbols = 4;
    cfg.n_rx = 1;
    const auto tx = transmit(Scheme::SA, cfg, parse_modulation("16QAM"), g);
    const auto grid = demodulate(tx.samples, cfg);
    for (int n = 0; n < cfg.n_symbols; ++n)
        EXPECT_LT((grid.symbols[n] - tx.grids[n]).norm() / tx.grids[n].norm(), 1e-12);
}

TEST(Propagate, IdentityImpairmentsGiveHTimesS) {
    auto g = rng_for(7);
    OfdmConfig cfg;
    cfg.n_symbols = 3;
    const auto ch = draw_channel(cfg, 3, g);
    const auto tx = transmit(Scheme::SFBC3, cfg, {}, g);
    const auto rx = propagate(tx, ch, cfg, kNoiseless, {}, g);
    for (int n = 0; n < cfg.n_symbols; ++n)
        for (int k = 1; k <= cfg.n_fft; ++k) {
            const CVector expect = ch.freq_response[k - 1] * tx.grids[n].col(k - 1);
            EXPECT_LT((rx.grid.y(n, k) - expect).norm(), 1e-10 * (1.0 + expect.norm()));
        }
}

TEST(Propagate, EarlyWindowInsideTheCpIsAPhaseRamp) {
    OfdmConfig cfg;
    cfg.n_symbols = 3;
    const int delta = -3;  // case II for 6 taps and a 10-sample CP
    auto g1 = rng_for(8);
    auto g2 = rng_for(8);
    const auto ch = draw_channel(cfg, 2, g1);
    const auto ch2 = draw_channel(cfg, 2, g2);
    const auto tx = transmit(Scheme::AL, cfg, {}, g1);
    const auto tx2 = transmit(Scheme::AL, cfg, {}, g2);
    const auto a = propagate(tx, ch, cfg, kNoiseless, {}, g1);
    const auto b = propagate(tx2, ch2, cfg, kNoiseless, {delta, 0.0, 0.0}, g2);
    for (int n = 0; n < cfg.n_symbols; ++n)
        for (int k = 1; k <= cfg.n_fft; ++k) {
            const cplx ramp = std::polar(1.0, 2.0 * kPi * (k - 1) * delta / cfg.n_fft);
            EXPECT_LT((b.grid.y(n, k) - ramp * a.grid.y(n, k)).norm(), 1e-10);
        }
}

TEST(Propagate, WindowBeyondASymbolThrows) {
    OfdmConfig cfg;
    CMatrix s = CMatrix::Zero(cfg.n_rx, cfg.stream_len());
    EXPECT_THROW(demodulate(s, cfg, cfg.cp_len + cfg.n_fft), WindowError);
    EXPECT_THROW(demodulate(s, cfg, -(cfg.cp_len + cfg.n_fft)), WindowError);
    EXPECT_NO_THROW(demodulate(s, cfg, -(cfg.cp_len + cfg.n_fft - 1)));
}

TEST(Propagate, SnrCalibration) {
    // Same stream with and without noise: the difference is the noise itself.
    OfdmConfig cfg;
    cfg.n_symbols = 20;
    for (Scheme s : {Scheme::SA, Scheme::AL, Scheme::SFBC2}) {
        double sig = 0.0, noise = 0.0;
        const double snr_db = 3.0;
        for (std::uint32_t t = 0; t < 600; ++t) {
            auto g1 = make_stream({33, 0, static_cast<std::uint16_t>(index_of(s)), t, StreamPurpose::test});
            auto g2 = g1;
            const auto ch = draw_channel(cfg, shape(s).n_t, g1);
            const auto tx = transmit(s, cfg, {}, g1);
            g2 = g1;
            const auto clean = channel_output(tx, ch, cfg, kNoiseless, {}, g1);
            const auto noisy = channel_output(tx, ch, cfg, snr_db, {}, g2);
            sig += clean.samples.squaredNorm();
            noise += (noisy.samples - clean.samples).squaredNorm();
        }
        EXPECT_NEAR(10.0 * std::log10(sig / noise), snr_db, 0.1) << to_string(s);
    }
}

TEST(Propagate, IntegerCfoShiftsSubcarriers) {
    OfdmConfig cfg;
    cfg.n_symbols = 2;
    auto g1 = rng_for(9);
    auto g2 = rng_for(9);
    const auto ch = draw_channel(cfg, 1, g1);
    const auto ch2 = draw_channel(cfg, 1, g2);
    const auto tx = transmit(Scheme::SA, cfg, {}, g1);
    const auto tx2 = transmit(Scheme::SA, cfg, {}, g2);
    const auto a = propagate(tx, ch, cfg, kNoiseless, {}, g1);
    const auto b = propagate(tx2, ch2, cfg, kNoiseless, {0, 1.0, 0.0}, g2);
    for (int n = 0; n < cfg.n_symbols; ++n)
        for (int k = 1; k < cfg.n_fft; ++k)
            EXPECT_NEAR((b.grid.y(n, k + 1).cwiseAbs() - a.grid.y(n, k).cwiseAbs()).norm(), 0.0, 1e-9);
}

TEST(Propagate, FractionalCfoLeaksIntoNeighbours) {
    // A pure tone on one subcarrier leaks energy into the others.
    OfdmConfig cfg;
    cfg.n_rx = 1;
    cfg.n_symbols = 1;
    CMatrix grid = CMatrix::Zero(1, cfg.n_fft);
    grid(0, 10) = 1.0;
    TransmitBurst tx{Scheme::SA, ofdm_modulate(grid, cfg.cp_len), {grid}};
    ChannelRealization ch;
    ch.taps = {CMatrix::Ones(1, 1)};
    ch.freq_response = frequency_response(ch.taps, cfg.n_fft);
    auto g = rng_for(10);
    const auto rx = propagate(tx, ch, cfg, kNoiseless, {0, 1e-2, 0.0}, g);
    double leak = 0.0;
    for (int k = 1; k <= cfg.n_fft; ++k)
        if (k != 11) leak += rx.grid.y(0, k).squaredNorm();
    // Leakage of a 0.01 offset: about (pi eps)^2 / 3.
    EXPECT_GT(leak, 0.0);
    EXPECT_NEAR(leak, std::pow(kPi * 1e-2, 2) / 3.0, 1e-4);
}

TEST(Propagate, TinyDopplerMatchesStaticChannel) {
    OfdmConfig cfg;
    cfg.n_symbols = 2;
    auto g1 = rng_for(11);
    auto g2 = rng_for(11);
    const auto ch = draw_channel(cfg, 2, g1);
    const auto ch2 = draw_channel(cfg, 2, g2);
    const auto tx = transmit(Scheme::SM2, cfg, {}, g1);
    const auto tx2 = transmit(Scheme::SM2, cfg, {}, g2);
    const auto a = channel_output(tx, ch, cfg, kNoiseless, {}, g1);
    const auto b = channel_output(tx2, ch2, cfg, kNoiseless, {0, 0.0, 1e-12}, g2);
    EXPECT_LT((a.samples - b.samples).norm() / a.samples.norm(), 1e-8);
}

TEST(NoiseGrid, HasRequestedVariance) {
    auto g = rng_for(12);
    OfdmConfig cfg;
    const auto grid = noise_grid(cfg, 0.5, g);
    double p = 0.0;
    for (const auto& s : grid.symbols) p += s.squaredNorm();
    EXPECT_NEAR(p / (cfg.n_symbols * cfg.n_fft * cfg.n_rx), 0.5, 0.01);
}
