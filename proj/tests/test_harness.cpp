#include <cstdio>
#include <filesystem>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "sfbcid/harness.hpp"

using namespace sfbcid;
using namespace sfbcid::harness;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig c;
    c.trials = 3;
    c.snr_grid = {0.0, 8.0};
    c.ofdm.n_fft = 32;
    c.ofdm.n_symbols = 40;
    c.seed = 77;
    return c;
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST(Config, ParsesKeyValueText) {
    const auto c = parse_config(R"(
        # comment
        pool = SA, AL
        snr_db = -2:4:2
        trials = 12
        n_b = 50
        n_fft = 64
        modulation = 16QAM
        sto = -3    # trailing comment
        cfo = 1e-4
        seed = 99
        allowance = tests
    )");
    EXPECT_EQ(c.pool, (std::vector<Scheme>{Scheme::SA, Scheme::AL}));
    EXPECT_EQ(c.snr_grid, (std::vector<double>{-2, 0, 2, 4}));
    EXPECT_EQ(c.trials, 12);
    EXPECT_EQ(c.ofdm.n_symbols, 50);
    EXPECT_EQ(c.ofdm.n_fft, 64);
    EXPECT_EQ(c.modulation.name(), "16QAM");
    EXPECT_EQ(c.impairments.sto, -3);
    EXPECT_DOUBLE_EQ(c.impairments.cfo, 1e-4);
    EXPECT_EQ(c.seed, 99u);
    EXPECT_EQ(c.allowance, AllowanceBasis::tests);
}

TEST(Config, RejectsBadInput) {
    EXPECT_THROW(parse_config("nope = 1"), ConfigError);
    EXPECT_THROW(parse_config("trials 3"), ConfigError);
    EXPECT_THROW(parse_config("trials = three"), ConfigError);
    EXPECT_THROW(parse_config("pool = SA, XYZ"), ConfigError);
    auto c = small_config();
    c.trials = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = small_config();
    c.ofdm.n_rx = 3;
    EXPECT_THROW(c.validate(), ConfigError);
    c = small_config();
    c.ofdm.n_fft = 36;
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Run, HighSnrSingleCodeIsPerfect) {
    ExperimentConfig c;
    c.pool = {Scheme::SA};
    c.trials = 100;
    c.snr_grid = {40.0};
    const auto t = run(c);
    ASSERT_EQ(t.rows.size(), 1u);
    EXPECT_DOUBLE_EQ(t.rows[0].pr, 1.0);
    EXPECT_EQ(t.rows[0].correct(Scheme::SA), 100);
}

TEST(Run, AggregationIsConsistent) {
    const auto t = run(small_config());
    for (const auto& p : t.rows) {
        double pr = 0.0;
        for (Scheme s : p.cfg.pool) {
            const auto i = static_cast<std::size_t>(index_of(s));
            int sum = 0;
            for (int v : p.confusion[i]) sum += v;
            EXPECT_EQ(sum, 3);
            EXPECT_EQ(p.trials[i], 3);
            pr += static_cast<double>(p.confusion[i][i]) / 3.0;
        }
        EXPECT_NEAR(p.pr, pr / 7.0, 1e-15);
    }
}

TEST(Run, DeterministicAcrossWorkerCounts) {
    RunOptions one{1, true, 0};
    RunOptions many{4, true, 0};
    const auto a = run(small_config(), one);
    const auto b = run(small_config(), many);
    std::ostringstream sa, sb, ta, tb;
    write_summary(sa, a);
    write_summary(sb, b);
    write_trials(ta, a);
    write_trials(tb, b);
    EXPECT_EQ(sa.str(), sb.str());
    EXPECT_EQ(ta.str(), tb.str());
    EXPECT_NE(sa.str().find("# schema: sfbcid.summary.v1"), std::string::npos);
}

TEST(Run, ReplayedTrialMatchesItsRow) {
    const auto cfg = small_config();
    const auto t = run(cfg, RunOptions{2, true, 0});
    for (std::size_t i = 0; i < t.records.size(); i += 5) {
        const auto& r = t.records[i];
        const auto again = run_trial(cfg, cfg.snr_grid[r.key.sweep], r.key);
        EXPECT_EQ(trial_csv_row(again, t.rows[r.key.sweep].cfg), trial_csv_row(r, t.rows[r.key.sweep].cfg));
    }
}

TEST(Run, DifferentSeedsDiffer) {
    auto a = small_config();
    auto b = small_config();
    b.seed = 78;
    const auto ra = simulate_observation(a, 0.0, {a.seed, 0, Scheme::AL, 0});
    const auto rb = simulate_observation(b, 0.0, {b.seed, 0, Scheme::AL, 0});
    EXPECT_GT((ra.grid.symbols[0] - rb.grid.symbols[0]).norm(), 0.0);
}

TEST(Run, Calibration) {
    auto c = small_config();
    c.pr_f = 0.1;
    const auto p = run_point(c, 8.0, 0, RunOptions{1, false, 20});
    ASSERT_TRUE(p.pr_o && p.pr_u);
    EXPECT_GT(*p.pr_o, 0.0);
    EXPECT_LT(*p.pr_o, 0.3);
    EXPECT_GT(*p.pr_u, 0.0);
    EXPECT_LE(*p.pr_u, 1.0);
}

TEST(Run, InterruptStopsEarly) {
    stop_flag().store(true);
    const auto t = run(small_config());
    stop_flag().store(false);
    EXPECT_FALSE(t.complete);
}

TEST(Presets, AllResolveAndValidate) {
    for (const auto& p : presets()) {
        EXPECT_EQ(&find_preset(p.name), &find_preset(p.figure));
        const auto pts = p.points(ExperimentConfig{});
        EXPECT_FALSE(pts.empty()) << p.name;
        for (const auto& pt : pts) EXPECT_NO_THROW(pt.cfg.validate()) << p.name;
    }
    EXPECT_THROW(find_preset("fig99"), ConfigError);
    EXPECT_TRUE(find_preset("prf").bound);
}

TEST(Presets, StoCoversAllCases) {
    std::set<std::string> cases;
    std::set<int> sizes;
    for (const auto& pt : find_preset("sto").points(ExperimentConfig{})) {
        cases.insert(std::string(sto_case(pt.cfg.impairments.sto, pt.cfg.ofdm.cp_len, pt.cfg.profile.taps)));
        sizes.insert(pt.cfg.ofdm.n_fft);
    }
    EXPECT_EQ(cases, (std::set<std::string>{"I", "II", "III", "IV"}));
    EXPECT_EQ(sizes, (std::set<int>{64, 128, 256}));
}

TEST(StoCase, Boundaries) {
    EXPECT_EQ(sto_case(0, 10, 6), "I");
    EXPECT_EQ(sto_case(-1, 10, 6), "II");
    EXPECT_EQ(sto_case(-5, 10, 6), "II");
    EXPECT_EQ(sto_case(-6, 10, 6), "III");
    EXPECT_EQ(sto_case(1, 10, 6), "IV");
}

TEST(Capture, RoundTripMatchesInMemoryIdentify) {
    auto cfg = small_config();
    const TrialKey key{cfg.seed, 0, Scheme::SFBC2, 4};
    const auto cap = capture_trial(cfg, 30.0, key);
    const auto path = temp_path("sfbcid_roundtrip.iq");
    iq::write(path, cap);
    const auto back = iq::read(path);
    EXPECT_EQ(back.cfg.n_fft, cfg.ofdm.n_fft);
    EXPECT_EQ(back.cfg.n_rx, cfg.ofdm.n_rx);
    EXPECT_EQ(back.cfg.n_symbols, cfg.ofdm.n_symbols);
    EXPECT_EQ(back.cfg.cp_len, cfg.ofdm.cp_len);
    const auto from_file = identify_capture(path, cfg.pr_f);
    const auto in_memory = identify_capture(cap, cfg.pr_f);
    EXPECT_EQ(from_file.scheme, in_memory.scheme);
    EXPECT_EQ(from_file.estimates, in_memory.estimates);
    EXPECT_EQ(from_file.scheme, Scheme::SFBC2);
    std::remove(path.c_str());
}

TEST(Capture, HeaderLayout) {
    iq::Capture c;
    c.cfg.n_fft = 16;
    c.cfg.cp_len = 4;
    c.cfg.n_rx = 4;
    c.cfg.n_symbols = 2;
    c.samples = CMatrix::Zero(4, 40);
    c.samples(0, 0) = {1.0, -2.0};
    const auto bytes = iq::encode(c);
    ASSERT_EQ(bytes.size(), 32u + 4 * 40 * 8);
    EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 7), "SFBCIQ1");
    EXPECT_EQ(bytes[7], 0);
    EXPECT_EQ(bytes[8], 16);
    EXPECT_EQ(bytes[12], 4);
    EXPECT_EQ(bytes[16], 4);
    EXPECT_EQ(bytes[20], 2);
    // 1.0f = 0x3f800000 little-endian, -2.0f = 0xc0000000
    EXPECT_EQ(bytes[35], 0x3f);
    EXPECT_EQ(bytes[34], 0x80);
    EXPECT_EQ(bytes[39], 0xc0);
}

TEST(Capture, Errors) {
    iq::Capture c;
    c.cfg.n_fft = 16;
    c.cfg.cp_len = 4;
    c.cfg.n_rx = 4;
    c.cfg.n_symbols = 2;
    c.samples = CMatrix::Zero(4, 40);
    auto bytes = iq::encode(c);

    auto truncated = bytes;
    truncated.resize(truncated.size() - 3);
    try {
        iq::decode(truncated);
        FAIL() << "expected a FormatError";
    } catch (const FormatError& e) {
        EXPECT_NE(std::string(e.what()).find("payload length"), std::string::npos);
    }

    auto few_antennas = bytes;
    few_antennas[16] = 3;
    EXPECT_THROW(iq::decode(few_antennas), FormatError);

    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    EXPECT_THROW(iq::decode(bad_magic), FormatError);

    EXPECT_THROW(iq::decode(std::vector<unsigned char>(10, 0)), FormatError);
    EXPECT_THROW(iq::read(temp_path("sfbcid_does_not_exist.iq")), FormatError);
}

TEST(Csv, HistogramSchema) {
    auto c = small_config();
    c.trials = 2;
    const auto h = estimate_histogram(c, 5.0, Scheme::SA);
    long total = 0;
    for (const auto& [q, n] : h) total += n;
    EXPECT_EQ(total, 2 * 16);
    std::ostringstream o;
    write_histogram(o, h, Scheme::SA, c, 5.0);
    EXPECT_EQ(o.str().rfind("# schema: sfbcid.histogram.v1\n", 0), 0u);
}

TEST(Format, ShortestRoundTrip) {
    EXPECT_EQ(fmt(6.0), "6");
    EXPECT_EQ(fmt(-2.5), "-2.5");
    EXPECT_EQ(std::stod(fmt(0.1 + 0.2)), 0.1 + 0.2);
}
