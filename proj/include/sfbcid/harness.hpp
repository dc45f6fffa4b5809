#pragma once

// Monte Carlo experiment runner: configuration, per-trial simulation with
// counter-keyed random streams, a bounded worker pool, aggregation into
// confusion matrices, figure presets and CSV output.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "sfbcid/classifier.hpp"
#include "sfbcid/codebook.hpp"
#include "sfbcid/iq_capture.hpp"
#include "sfbcid/random.hpp"
#include "sfbcid/waveform.hpp"

namespace sfbcid::harness {

// ---------------------------------------------------------------------------
// Formatting helpers

/// Shortest decimal text that round-trips to the same double.
inline std::string fmt(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(sep, start);
        out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

// ---------------------------------------------------------------------------
// Configuration

struct ExperimentConfig {
    std::vector<Scheme> pool{kAllSchemes.begin(), kAllSchemes.end()};
    std::vector<double> snr_grid{-4, -2, 0, 2, 4, 6, 8, 10};
    int trials = 200;
    OfdmConfig ofdm;
    ChannelProfile profile;
    double pr_f = 1e-4;
    Modulation modulation;
    Impairments impairments;
    std::uint64_t seed = 1;
    AllowanceBasis allowance = AllowanceBasis::fft_size;

    int max_nt() const {
        int m = 0;
        for (Scheme s : pool) m = std::max(m, shape(s).n_t);
        return m;
    }

    void validate() const {
        if (trials < 1) throw ConfigError("trials must be >= 1");
        if (pool.empty()) throw ConfigError("scheme pool is empty");
        if (snr_grid.empty()) throw ConfigError("SNR grid is empty");
        ofdm.validate(max_nt());
        for (Scheme s : pool) require_divisible(s, ofdm.n_fft);
        detector().validate();
        constellation(modulation);
        if (profile.taps < 1 || !(profile.decay > 0.0)) throw ConfigError("invalid channel profile");
        if (std::abs(impairments.sto) >= ofdm.cp_len + ofdm.n_fft)
            throw ConfigError("sto moves the FFT window beyond a whole symbol");
        if (impairments.doppler < 0.0) throw ConfigError("doppler must be >= 0");
    }

    DetectorConfig detector() const { return {pr_f, ofdm.n_rx, ofdm.n_symbols, ofdm.n_fft, allowance}; }
};

inline std::vector<double> parse_number_list(std::string_view text) {
    // Either "a,b,c" or "start:stop:step" (inclusive).
    const std::string t = trim(text);
    try {
        if (t.find(':') != std::string::npos) {
            const auto parts = split(t, ':');
            if (parts.size() != 3) throw ConfigError("range must be start:stop:step");
            const double a = std::stod(parts[0]);
            const double b = std::stod(parts[1]);
            const double s = std::stod(parts[2]);
            if (!(s > 0.0) || b < a) throw ConfigError("range needs step > 0 and stop >= start");
            std::vector<double> out;
            const int n = static_cast<int>(std::floor((b - a) / s + 1e-9));
            for (int i = 0; i <= n; ++i) out.push_back(a + i * s);
            return out;
        }
        std::vector<double> out;
        for (const auto& p : split(t, ',')) out.push_back(std::stod(trim(p)));
        return out;
    } catch (const std::invalid_argument&) {
        throw ConfigError("not a number list: '" + t + "'");
    } catch (const std::out_of_range&) {
        throw ConfigError("number out of range in '" + t + "'");
    }
}

inline std::vector<Scheme> parse_pool(std::string_view text) {
    const std::string t = trim(text);
    if (t == "all") return {kAllSchemes.begin(), kAllSchemes.end()};
    std::vector<Scheme> pool;
    for (const auto& name : split(t, ',')) {
        const auto s = parse_scheme(trim(name));
        if (!s) throw ConfigError("unknown scheme '" + trim(name) + "'");
        if (std::find(pool.begin(), pool.end(), *s) == pool.end()) pool.push_back(*s);
    }
    return pool;
}

/// Keys accepted by apply_setting, with one-line descriptions.
inline const std::vector<std::pair<std::string, std::string>>& config_keys() {
    static const std::vector<std::pair<std::string, std::string>> keys{
        {"pool", "comma-separated scheme names or 'all'"},
        {"snr_db", "SNR grid: 'a,b,c' or 'start:stop:step' (dB)"},
        {"trials", "trials per scheme and sweep point"},
        {"n_b", "OFDM symbols per observation"},
        {"n_fft", "FFT size"},
        {"n_r", "receive antennas"},
        {"cp_len", "cyclic prefix length"},
        {"pr_f", "false-alarm probability"},
        {"modulation", "e.g. QPSK, 8PSK, 16QAM"},
        {"sto", "FFT window offset in samples"},
        {"cfo", "carrier offset over subcarrier spacing"},
        {"doppler", "maximum Doppler over sampling rate"},
        {"taps", "channel taps"},
        {"decay", "exponential delay-profile constant"},
        {"seed", "master seed"},
        {"allowance", "N in ceil(N pr_f): 'fft_size' or 'tests'"},
    };
    return keys;
}

inline void apply_setting(ExperimentConfig& cfg, std::string_view key_in, std::string_view value_in) {
    const std::string key = trim(key_in);
    const std::string value = trim(value_in);
    const auto as_int = [&] {
        try {
            std::size_t used = 0;
            const long long v = std::stoll(value, &used);
            if (used != value.size()) throw std::invalid_argument("trailing text");
            return v;
        } catch (const std::exception&) {
            throw ConfigError("'" + key + "' expects an integer, got '" + value + "'");
        }
    };
    const auto as_double = [&] {
        try {
            std::size_t used = 0;
            const double v = std::stod(value, &used);
            if (used != value.size()) throw std::invalid_argument("trailing text");
            return v;
        } catch (const std::exception&) {
            throw ConfigError("'" + key + "' expects a number, got '" + value + "'");
        }
    };
    if (key == "pool") cfg.pool = parse_pool(value);
    else if (key == "snr_db") cfg.snr_grid = parse_number_list(value);
    else if (key == "trials") cfg.trials = static_cast<int>(as_int());
    else if (key == "n_b") cfg.ofdm.n_symbols = static_cast<int>(as_int());
    else if (key == "n_fft") cfg.ofdm.n_fft = static_cast<int>(as_int());
    else if (key == "n_r") cfg.ofdm.n_rx = static_cast<int>(as_int());
    else if (key == "cp_len") cfg.ofdm.cp_len = static_cast<int>(as_int());
    else if (key == "pr_f") cfg.pr_f = as_double();
    else if (key == "modulation") cfg.modulation = parse_modulation(value);
    else if (key == "sto") cfg.impairments.sto = static_cast<int>(as_int());
    else if (key == "cfo") cfg.impairments.cfo = as_double();
    else if (key == "doppler") cfg.impairments.doppler = as_double();
    else if (key == "taps") cfg.profile.taps = static_cast<int>(as_int());
    else if (key == "decay") cfg.profile.decay = as_double();
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(as_int());
    else if (key == "allowance") cfg.allowance = parse_allowance_basis(value);
    else throw ConfigError("unknown configuration key '" + key + "'");
}

/// Parses "key = value" lines; '#' starts a comment.
inline ExperimentConfig parse_config(std::string_view text, ExperimentConfig cfg = {}) {
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        try {
            apply_setting(cfg, line.substr(0, eq), line.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path, ExperimentConfig cfg = {}) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str(), std::move(cfg));
}

// ---------------------------------------------------------------------------
// Single trial

struct TrialKey {
    std::uint64_t seed = 0;
    std::uint32_t sweep = 0;
    Scheme scheme = Scheme::SA;
    std::uint32_t trial = 0;
};

struct TrialRecord {
    TrialKey key;
    double snr_db = 0.0;
    Scheme estimate = Scheme::SA;
    LevelOneResult level1;
    std::optional<LevelTwoResult> level2;

    bool correct() const { return estimate == key.scheme; }
};

inline Philox4x32 trial_stream(const TrialKey& k) {
    return make_stream({k.seed, k.sweep, static_cast<std::uint16_t>(index_of(k.scheme)), k.trial,
                        StreamPurpose::trial});
}

/// Simulated observation of one trial: channel, data, impairments and noise
/// all drawn from the trial's own stream.
inline ReceivedGrid simulate_observation(const ExperimentConfig& cfg, double snr_db, const TrialKey& key) {
    auto rng = trial_stream(key);
    const auto ch = draw_channel(cfg.ofdm, shape(key.scheme).n_t, rng, cfg.profile);
    const auto tx = transmit(key.scheme, cfg.ofdm, cfg.modulation, rng);
    return propagate(tx, ch, cfg.ofdm, snr_db, cfg.impairments, rng, cfg.profile);
}

inline TrialRecord run_trial(const ExperimentConfig& cfg, double snr_db, const Detector& det,
                             const TrialKey& key) {
    const auto rx = simulate_observation(cfg, snr_db, key);
    const auto res = det.identify(rx.grid);
    return {key, snr_db, res.scheme, res.level1, res.level2};
}

inline TrialRecord run_trial(const ExperimentConfig& cfg, double snr_db, const TrialKey& key) {
    return run_trial(cfg, snr_db, Detector(cfg.detector()), key);
}

// ---------------------------------------------------------------------------
// Worker pool

/// Global interrupt flag; workers stop picking up new work once it is set.
inline std::atomic<bool>& stop_flag() {
    static std::atomic<bool> flag{false};
    return flag;
}

/// Worker count from SFBCID_WORKERS, else the hardware concurrency.
inline int default_workers() {
    if (const char* env = std::getenv("SFBCID_WORKERS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(i) for i in [0, n) on up to `workers` threads. Returns the
/// per-index completion flags (all true unless interrupted).
inline std::vector<char> parallel_for(int n, int workers, const std::function<void(int)>& fn) {
    std::vector<char> done(static_cast<std::size_t>(n), 0);
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    const auto work = [&] {
        for (;;) {
            if (stop_flag().load() || failed.load()) return;
            const int i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
                done[static_cast<std::size_t>(i)] = 1;
            } catch (...) {
                if (!failed.exchange(true)) failure = std::current_exception();
                return;
            }
        }
    };
    workers = std::clamp(workers, 1, std::max(1, n));
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
    return done;
}

// ---------------------------------------------------------------------------
// Aggregation

using Confusion = std::array<std::array<int, 7>, 7>;  // [true][estimated], scheme index order

struct PointResult {
    std::uint32_t sweep = 0;
    ExperimentConfig cfg;  // snr_grid holds the single SNR of this point
    double snr_db = 0.0;
    Confusion confusion{};
    std::array<int, 7> trials{};  // completed trials per true scheme
    double pr = 0.0;
    double ci95 = 0.0;
    std::optional<double> pr_o;
    std::optional<double> pr_u;
    double wall_s = 0.0;
    bool complete = true;

    int correct(Scheme s) const {
        const auto i = static_cast<std::size_t>(index_of(s));
        return confusion[i][i];
    }
};

/// Pr = mean over the pool of Pr{C | C}; ci95 is the normal-approximation
/// half-width of that mean.
inline void finalize(PointResult& p) {
    double sum = 0.0;
    double var = 0.0;
    int used = 0;
    for (Scheme s : p.cfg.pool) {
        const auto i = static_cast<std::size_t>(index_of(s));
        const int n = p.trials[i];
        if (n == 0) continue;
        const double q = static_cast<double>(p.confusion[i][i]) / n;
        sum += q;
        var += q * (1.0 - q) / n;
        ++used;
    }
    p.pr = used ? sum / used : 0.0;
    p.ci95 = used ? 1.959963984540054 * std::sqrt(var) / used : 0.0;
}

struct ResultTable {
    std::string preset;
    std::vector<PointResult> rows;
    std::vector<TrialRecord> records;  // filled when RunOptions::keep_records
    bool complete = true;
};

struct RunOptions {
    int workers = default_workers();
    bool keep_records = false;
    int calibration_grids = 0;  // > 0: measure pr_o on pure noise and fill pr_u
};

/// Pure-noise estimate of the first-step overestimation probability at the
/// level-1 pairs.
inline double calibrate_overestimation(const ExperimentConfig& cfg, std::uint32_t sweep, int grids,
                                       int workers = default_workers()) {
    const Detector det(cfg.detector());
    const auto pairs = level_one_pairs(cfg.ofdm.n_fft);
    std::vector<int> hits(static_cast<std::size_t>(grids), 0);
    const auto done = parallel_for(grids, workers, [&](int i) {
        auto rng = make_stream({cfg.seed, sweep, 0, static_cast<std::uint32_t>(i),
                                StreamPurpose::noise_calibration});
        const auto g = noise_grid(cfg.ofdm, 1.0, rng);
        int h = 0;
        for (int k : pairs)
            h += subspace::statistics(subspace::pair_covariance(g, k)).at(1) > det.thresholds().ratio(1);
        hits[static_cast<std::size_t>(i)] = h;
    });
    long total = 0;
    long tests = 0;
    for (int i = 0; i < grids; ++i)
        if (done[static_cast<std::size_t>(i)]) {
            total += hits[static_cast<std::size_t>(i)];
            tests += static_cast<long>(pairs.size());
        }
    return tests ? static_cast<double>(total) / tests : 0.0;
}

/// One sweep point: every scheme of the pool times cfg.trials.
inline PointResult run_point(const ExperimentConfig& cfg, double snr_db, std::uint32_t sweep,
                             const RunOptions& opt = {}, std::vector<TrialRecord>* records = nullptr) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    PointResult p;
    p.sweep = sweep;
    p.cfg = cfg;
    p.cfg.snr_grid = {snr_db};
    p.snr_db = snr_db;

    const Detector det(cfg.detector());
    const int per = cfg.trials;
    const int n = static_cast<int>(cfg.pool.size()) * per;
    std::vector<TrialRecord> out(static_cast<std::size_t>(n));
    const auto done = parallel_for(n, opt.workers, [&](int i) {
        const TrialKey key{cfg.seed, sweep, cfg.pool[static_cast<std::size_t>(i / per)],
                           static_cast<std::uint32_t>(i % per)};
        out[static_cast<std::size_t>(i)] = run_trial(cfg, snr_db, det, key);
    });
    for (int i = 0; i < n; ++i) {
        if (!done[static_cast<std::size_t>(i)]) {
            p.complete = false;
            continue;
        }
        const auto& r = out[static_cast<std::size_t>(i)];
        const auto t = static_cast<std::size_t>(index_of(r.key.scheme));
        ++p.trials[t];
        ++p.confusion[t][static_cast<std::size_t>(index_of(r.estimate))];
        if (records) records->push_back(r);
    }
    finalize(p);

    if (opt.calibration_grids > 0 && p.complete) {
        p.pr_o = calibrate_overestimation(cfg, sweep, opt.calibration_grids, opt.workers);
        double b = 0.0;
        for (Scheme s : cfg.pool) b += joint_upper_bound(s, *p.pr_o, cfg.ofdm.n_fft, cfg.pr_f, cfg.allowance);
        p.pr_u = b / static_cast<double>(cfg.pool.size());
    }
    p.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return p;
}

/// A sweep point: a full configuration plus the SNR it runs at.
struct SweepPoint {
    ExperimentConfig cfg;
    double snr_db = 0.0;
};

inline std::vector<SweepPoint> expand(const ExperimentConfig& cfg) {
    std::vector<SweepPoint> pts;
    for (double snr : cfg.snr_grid) pts.push_back({cfg, snr});
    return pts;
}

/// Runs the points in order; sweep index = position in the list.
inline ResultTable run_points(const std::vector<SweepPoint>& points, const RunOptions& opt = {},
                              std::string preset = {}) {
    for (const auto& pt : points) pt.cfg.validate();
    ResultTable table;
    table.preset = std::move(preset);
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (stop_flag().load()) {
            table.complete = false;
            break;
        }
        auto row = run_point(points[i].cfg, points[i].snr_db, static_cast<std::uint32_t>(i), opt,
                             opt.keep_records ? &table.records : nullptr);
        table.complete = table.complete && row.complete;
        table.rows.push_back(std::move(row));
    }
    return table;
}

inline ResultTable run(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
    cfg.validate();
    return run_points(expand(cfg), opt);
}

/// Level-1 pair estimates of one scheme at one point, as a q-hat histogram.
inline std::map<int, long> estimate_histogram(const ExperimentConfig& cfg, double snr_db, Scheme scheme,
                                              std::uint32_t sweep = 0, int workers = default_workers()) {
    cfg.validate();
    const Detector det(cfg.detector());
    const auto pairs = level_one_pairs(cfg.ofdm.n_fft);
    std::vector<std::vector<int>> est(static_cast<std::size_t>(cfg.trials));
    const auto done = parallel_for(cfg.trials, workers, [&](int i) {
        const TrialKey key{cfg.seed, sweep, scheme, static_cast<std::uint32_t>(i)};
        const auto rx = simulate_observation(cfg, snr_db, key);
        auto& e = est[static_cast<std::size_t>(i)];
        for (int k : pairs) e.push_back(det.estimate(rx.grid, k));
    });
    std::map<int, long> hist;
    for (int i = 0; i < cfg.trials; ++i)
        if (done[static_cast<std::size_t>(i)])
            for (int q : est[static_cast<std::size_t>(i)]) ++hist[q];
    return hist;
}

// ---------------------------------------------------------------------------
// STO cases

/// I: delta = 0; II: inside the ISI-free part of the CP; III: earlier than
/// that; IV: late window.
inline std::string_view sto_case(int delta, int cp_len, int taps) {
    if (delta == 0) return "I";
    if (delta > 0) return "IV";
    return delta >= -(cp_len - taps + 1) ? "II" : "III";
}

// ---------------------------------------------------------------------------
// Presets

struct Preset {
    std::string name;
    std::string figure;
    std::string description;
    bool histogram = false;  // emits a q-hat histogram instead of a summary
    bool bound = false;      // runs the pure-noise calibration and fills pr_u
    std::function<std::vector<SweepPoint>(const ExperimentConfig&)> points;
};

inline std::vector<SweepPoint> cross(const ExperimentConfig& base,
                                     const std::vector<std::function<void(ExperimentConfig&)>>& variants,
                                     const std::vector<double>& snrs) {
    std::vector<SweepPoint> pts;
    for (const auto& v : variants) {
        ExperimentConfig c = base;
        v(c);
        for (double s : snrs) pts.push_back({c, s});
    }
    return pts;
}

inline const std::vector<Preset>& presets() {
    static const std::vector<Preset> list = [] {
        using Fn = std::function<void(ExperimentConfig&)>;
        std::vector<Preset> p;
        p.push_back({"histogram", "fig4", "q-hat histogram of SA at -1 dB, N_b = 400", true, false,
                     [](const ExperimentConfig& b) {
                         ExperimentConfig c = b;
                         c.pool = {Scheme::SA};
                         c.ofdm.n_symbols = 400;
                         return std::vector<SweepPoint>{{c, -1.0}};
                     }});
        p.push_back({"nt2", "fig5", "two-antenna pool {SM2, AL} versus SNR", false, false,
                     [](const ExperimentConfig& b) {
                         ExperimentConfig c = b;
                         c.pool = {Scheme::SM2, Scheme::AL};
                         return cross(c, {Fn([](ExperimentConfig&) {})}, c.snr_grid);
                     }});
        p.push_back({"nb", "fig6", "N_b in {50, 100, 200, 400} versus SNR", false, false,
                     [](const ExperimentConfig& b) {
                         std::vector<Fn> v;
                         for (int nb : {50, 100, 200, 400}) v.push_back([nb](ExperimentConfig& c) { c.ofdm.n_symbols = nb; });
                         return cross(b, v, b.snr_grid);
                     }});
        p.push_back({"prf", "fig7", "Pr_f in {1e-1 .. 1e-4} at 6 dB with the Pr_u bound", false, true,
                     [](const ExperimentConfig& b) {
                         std::vector<Fn> v;
                         for (double f : {1e-1, 1e-2, 1e-3, 1e-4}) v.push_back([f](ExperimentConfig& c) { c.pr_f = f; });
                         return cross(b, v, {6.0});
                     }});
        p.push_back({"nfft", "fig8", "N in {64, 128, 256} versus SNR", false, false,
                     [](const ExperimentConfig& b) {
                         std::vector<Fn> v;
                         for (int n : {64, 128, 256}) v.push_back([n](ExperimentConfig& c) { c.ofdm.n_fft = n; });
                         return cross(b, v, b.snr_grid);
                     }});
        p.push_back({"nr", "fig9", "N_r in {4, 6, 8, 10} versus SNR", false, false,
                     [](const ExperimentConfig& b) {
                         std::vector<Fn> v;
                         for (int r : {4, 6, 8, 10}) v.push_back([r](ExperimentConfig& c) { c.ofdm.n_rx = r; });
                         return cross(b, v, b.snr_grid);
                     }});
        p.push_back({"modulation", "fig10", "QPSK, 8PSK, 16QAM, 64QAM versus SNR", false, false,
                     [](const ExperimentConfig& b) {
                         std::vector<Fn> v;
                         for (const char* m : {"QPSK", "8PSK", "16QAM", "64QAM"})
                             v.push_back([m](ExperimentConfig& c) { c.modulation = parse_modulation(m); });
                         return cross(b, v, b.snr_grid);
                     }});
        p.push_back({"sto", "fig11", "timing offset across cases I-IV for N in {64, 128, 256} at 6 dB", false, false,
                     [](const ExperimentConfig& b) {
                         std::vector<Fn> v;
                         for (int n : {64, 128, 256})
                             for (int d : {-20, -12, -8, -6, -5, -3, -1, 0, 1, 2, 5, 10})
                                 v.push_back([n, d](ExperimentConfig& c) {
                                     c.ofdm.n_fft = n;
                                     c.impairments.sto = d;
                                 });
                         return cross(b, v, {6.0});
                     }});
        p.push_back({"cfo", "fig12", "CFO sweep at 4 and 6 dB, N_b in {50, 100}", false, false,
                     [](const ExperimentConfig& b) {
                         std::vector<Fn> v;
                         for (int nb : {50, 100})
                             for (double f : {0.0, 1e-5, 1e-4, 5e-4, 1e-3, 5e-3, 1e-2})
                                 v.push_back([nb, f](ExperimentConfig& c) {
                                     c.ofdm.n_symbols = nb;
                                     c.impairments.cfo = f;
                                 });
                         return cross(b, v, {4.0, 6.0});
                     }});
        p.push_back({"doppler", "fig13", "Doppler sweep at 4 and 6 dB, N_b in {50, 100}", false, false,
                     [](const ExperimentConfig& b) {
                         std::vector<Fn> v;
                         for (int nb : {50, 100})
                             for (double f : {1e-6, 3e-6, 1e-5, 3e-5, 1e-4})
                                 v.push_back([nb, f](ExperimentConfig& c) {
                                     c.ofdm.n_symbols = nb;
                                     c.impairments.doppler = f;
                                 });
                         return cross(b, v, {4.0, 6.0});
                     }});
        return p;
    }();
    return list;
}

/// Finds a preset by name or figure alias.
inline const Preset& find_preset(std::string_view name) {
    for (const auto& p : presets())
        if (p.name == name || p.figure == name) return p;
    throw ConfigError("unknown preset '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// CSV output. Each file starts with "# schema: sfbcid.<kind>.v1".

inline constexpr std::string_view kTrialSchema = "sfbcid.trials.v1";
inline constexpr std::string_view kSummarySchema = "sfbcid.summary.v1";
inline constexpr std::string_view kHistogramSchema = "sfbcid.histogram.v1";

inline std::string trial_csv_header() {
    return "seed,sweep,trial,scheme_true,scheme_est,correct,snr_db,n_b,n_fft,n_r,cp_len,pr_f,"
           "modulation,sto,cfo,doppler,level1_subset,d_SFC1,d_SFC2,d_SFC3,d_SM3,"
           "level2_cand0,level2_d0,level2_cand1,level2_d1";
}

inline std::string trial_csv_row(const TrialRecord& r, const ExperimentConfig& cfg) {
    std::ostringstream o;
    o << r.key.seed << ',' << r.key.sweep << ',' << r.key.trial << ',' << to_string(r.key.scheme) << ','
      << to_string(r.estimate) << ',' << (r.correct() ? 1 : 0) << ',' << fmt(r.snr_db) << ','
      << cfg.ofdm.n_symbols << ',' << cfg.ofdm.n_fft << ',' << cfg.ofdm.n_rx << ',' << cfg.ofdm.cp_len << ','
      << fmt(cfg.pr_f) << ',' << cfg.modulation.name() << ',' << cfg.impairments.sto << ','
      << fmt(cfg.impairments.cfo) << ',' << fmt(cfg.impairments.doppler) << ',' << to_string(r.level1.chosen);
    for (int d : r.level1.distances) o << ',' << d;
    if (r.level2) {
        for (int c = 0; c < 2; ++c)
            o << ',' << to_string(r.level2->candidates[static_cast<std::size_t>(c)]) << ','
              << r.level2->distances[static_cast<std::size_t>(c)];
    } else {
        o << ",,,,";
    }
    return o.str();
}

inline void write_trials(std::ostream& os, const ResultTable& t) {
    os << "# schema: " << kTrialSchema << '\n' << trial_csv_header() << '\n';
    for (const auto& r : t.records) {
        const auto& row = t.rows.at(r.key.sweep);
        os << trial_csv_row(r, row.cfg) << '\n';
    }
}

inline std::string summary_csv_header(bool timing = false) {
    std::string h = "preset,sweep,pool,snr_db,n_b,n_fft,n_r,cp_len,pr_f,modulation,sto,sto_case,cfo,doppler,"
                    "trials,pr,ci95,pr_o,pr_u,complete";
    for (Scheme s : kAllSchemes) h += ",correct_" + std::string(to_string(s));
    for (Scheme a : kAllSchemes)
        for (Scheme b : kAllSchemes) h += ",conf_" + std::string(to_string(a)) + "_" + std::string(to_string(b));
    if (timing) h += ",wall_s";
    return h;
}

inline std::string summary_csv_row(const PointResult& p, std::string_view preset, bool timing = false) {
    const auto& c = p.cfg;
    std::ostringstream o;
    std::string pool;
    for (Scheme s : c.pool) pool += (pool.empty() ? "" : ";") + std::string(to_string(s));
    int trials = 0;
    for (int t : p.trials) trials += t;
    o << preset << ',' << p.sweep << ',' << pool << ',' << fmt(p.snr_db) << ',' << c.ofdm.n_symbols << ','
      << c.ofdm.n_fft << ',' << c.ofdm.n_rx << ',' << c.ofdm.cp_len << ',' << fmt(c.pr_f) << ','
      << c.modulation.name() << ',' << c.impairments.sto << ','
      << sto_case(c.impairments.sto, c.ofdm.cp_len, c.profile.taps) << ',' << fmt(c.impairments.cfo) << ','
      << fmt(c.impairments.doppler) << ',' << trials << ',' << fmt(p.pr) << ',' << fmt(p.ci95) << ','
      << (p.pr_o ? fmt(*p.pr_o) : "") << ',' << (p.pr_u ? fmt(*p.pr_u) : "") << ',' << (p.complete ? 1 : 0);
    for (Scheme s : kAllSchemes) o << ',' << p.correct(s);
    for (const auto& row : p.confusion)
        for (int v : row) o << ',' << v;
    if (timing) o << ',' << fmt(p.wall_s);
    return o.str();
}

inline void write_summary(std::ostream& os, const ResultTable& t, bool timing = false) {
    os << "# schema: " << kSummarySchema << '\n' << summary_csv_header(timing) << '\n';
    for (const auto& p : t.rows) os << summary_csv_row(p, t.preset, timing) << '\n';
}

inline void write_histogram(std::ostream& os, const std::map<int, long>& hist, Scheme scheme,
                            const ExperimentConfig& cfg, double snr_db) {
    os << "# schema: " << kHistogramSchema << '\n'
       << "scheme,snr_db,n_b,n_fft,n_r,pr_f,q_true,q_hat,count\n";
    const int q_true = feature_template(scheme, cfg.ofdm.n_fft).at(1);
    for (const auto& [q, n] : hist)
        os << to_string(scheme) << ',' << fmt(snr_db) << ',' << cfg.ofdm.n_symbols << ',' << cfg.ofdm.n_fft
           << ',' << cfg.ofdm.n_rx << ',' << fmt(cfg.pr_f) << ',' << q_true << ',' << q << ',' << n << '\n';
}

// ---------------------------------------------------------------------------
// Captures

/// Writes the received stream of one simulated trial to a capture.
inline iq::Capture capture_trial(const ExperimentConfig& cfg, double snr_db, const TrialKey& key) {
    auto rng = trial_stream(key);
    const auto ch = draw_channel(cfg.ofdm, shape(key.scheme).n_t, rng, cfg.profile);
    const auto tx = transmit(key.scheme, cfg.ofdm, cfg.modulation, rng);
    auto stream = channel_output(tx, ch, cfg.ofdm, snr_db, cfg.impairments, rng, cfg.profile);
    return {cfg.ofdm, 1.92e6, std::move(stream.samples)};
}

inline IdentificationResult identify_capture(const iq::Capture& c, double pr_f, int sto = 0,
                                             AllowanceBasis basis = AllowanceBasis::fft_size) {
    const DetectorConfig dc{pr_f, c.cfg.n_rx, c.cfg.n_symbols, c.cfg.n_fft, basis};
    return Detector(dc).identify(demodulate(c.samples, c.cfg, sto));
}

inline IdentificationResult identify_capture(const std::string& path, double pr_f, int sto = 0,
                                             AllowanceBasis basis = AllowanceBasis::fft_size) {
    return identify_capture(iq::read(path), pr_f, sto, basis);
}

}  // namespace sfbcid::harness
