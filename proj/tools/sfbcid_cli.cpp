// sfbcid: command-line front end for simulation sweeps, capture identification
// and the threshold / Tracy-Widom / flops calculators.

#include <csignal>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sfbcid/sfbcid.hpp"

namespace {

using namespace sfbcid;
using harness::fmt;

extern "C" void on_sigint(int) { harness::stop_flag().store(true); }

/// Output stream: a file when a path is given, else stdout.
struct Output {
    std::unique_ptr<std::ofstream> file;
    std::ostream& get() { return file ? *file : std::cout; }

    explicit Output(const std::string& path) {
        if (path.empty() || path == "-") return;
        file = std::make_unique<std::ofstream>(path);
        if (!*file) throw Error("cannot open " + path + " for writing");
    }
};

harness::ExperimentConfig build_config(const std::string& path, const std::vector<std::string>& sets) {
    harness::ExperimentConfig cfg;
    if (!path.empty()) cfg = harness::load_config(path);
    for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
        harness::apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
    }
    return cfg;
}

int cmd_simulate(const std::string& config, const std::vector<std::string>& sets, const std::string& preset,
                 const std::string& out, const std::string& trials_out, bool timing, int calibrate,
                 const std::string& replay) {
    const auto cfg = build_config(config, sets);

    if (!replay.empty()) {
        // sweep,scheme,trial against the SNR grid of the configuration
        const auto parts = harness::split(replay, ',');
        if (parts.size() != 3) throw ConfigError("--replay expects sweep,scheme,trial");
        const auto sweep = static_cast<std::uint32_t>(std::stoul(parts[0]));
        const auto scheme = parse_scheme(harness::trim(parts[1]));
        if (!scheme) throw ConfigError("unknown scheme '" + parts[1] + "'");
        const auto trial = static_cast<std::uint32_t>(std::stoul(parts[2]));
        const auto points = preset.empty() ? harness::expand(cfg) : harness::find_preset(preset).points(cfg);
        if (sweep >= points.size()) throw ConfigError("sweep index out of range");
        const auto& pt = points[sweep];
        pt.cfg.validate();
        const auto rec = harness::run_trial(pt.cfg, pt.snr_db, {pt.cfg.seed, sweep, *scheme, trial});
        Output o(out);
        o.get() << "# schema: " << harness::kTrialSchema << '\n'
                << harness::trial_csv_header() << '\n'
                << harness::trial_csv_row(rec, pt.cfg) << '\n';
        return 0;
    }

    harness::RunOptions opt;
    opt.keep_records = !trials_out.empty();
    opt.calibration_grids = calibrate;

    std::signal(SIGINT, on_sigint);
    harness::ResultTable table;
    if (!preset.empty()) {
        const auto& p = harness::find_preset(preset);
        const auto points = p.points(cfg);
        if (p.histogram) {
            const auto& pt = points.front();
            const Scheme s = pt.cfg.pool.front();
            const auto hist = harness::estimate_histogram(pt.cfg, pt.snr_db, s, 0, opt.workers);
            Output o(out);
            harness::write_histogram(o.get(), hist, s, pt.cfg, pt.snr_db);
            return harness::stop_flag().load() ? 130 : 0;
        }
        if (p.bound && opt.calibration_grids == 0) opt.calibration_grids = 400;
        table = harness::run_points(points, opt, p.name);
    } else {
        table = harness::run(cfg, opt);
    }

    Output o(out);
    harness::write_summary(o.get(), table, timing);
    if (!trials_out.empty()) {
        Output t(trials_out);
        harness::write_trials(t.get(), table);
    }
    if (!table.complete) {
        std::cerr << "interrupted: partial results written\n";
        return 130;
    }
    return 0;
}

int cmd_identify(const std::string& path, double pr_f, int sto, const std::string& allowance, bool dump) {
    const auto cap = iq::read(path);
    const DetectorConfig dc{pr_f, cap.cfg.n_rx, cap.cfg.n_symbols, cap.cfg.n_fft,
                            parse_allowance_basis(allowance)};
    const Detector det(dc);
    const auto grid = demodulate(cap.samples, cap.cfg, sto);
    const auto res = det.identify(grid);

    std::cout << "scheme," << to_string(res.scheme) << '\n'
              << "level1_subset," << to_string(res.level1.chosen) << '\n';
    for (std::size_t i = 0; i < kSubsets.size(); ++i)
        std::cout << "d_" << to_string(kSubsets[i]) << ',' << res.level1.distances[i] << '\n';
    if (res.level2)
        for (int c = 0; c < 2; ++c)
            std::cout << "d_" << to_string(res.level2->candidates[static_cast<std::size_t>(c)]) << ','
                      << res.level2->distances[static_cast<std::size_t>(c)] << '\n';

    if (dump) {
        std::cout << "\nk,q_hat,eigenvalues...,U...\n";
        for (const auto& [k, q] : res.estimates) {
            const auto cov = subspace::pair_covariance(grid, k);
            const auto stats = subspace::statistics(cov);
            std::cout << k << ',' << q;
            for (int i = 0; i < cov.eigs.size(); ++i) std::cout << ',' << fmt(cov.eigs(i));
            for (double u : stats.u) std::cout << ',' << fmt(u);
            std::cout << '\n';
        }
    }
    return 0;
}

int cmd_synth(const std::string& config, const std::vector<std::string>& sets, const std::string& scheme_name,
              double snr_db, unsigned trial, const std::string& out) {
    auto cfg = build_config(config, sets);
    const auto s = parse_scheme(scheme_name);
    if (!s) throw ConfigError("unknown scheme '" + scheme_name + "'");
    cfg.pool = {*s};
    cfg.validate();
    iq::write(out, harness::capture_trial(cfg, snr_db, {cfg.seed, 0, *s, trial}));
    return 0;
}

int cmd_thresholds(int n_r, int n_b, double pr_f) {
    std::cout << "q,u,p,mu,xi,z,gamma,gamma_ratio\n";
    for (int q = 1; q < 4 * n_r; ++q) {
        const auto [u, p] = rmt::test_dimensions(q, n_r, n_b);
        const auto cs = rmt::centering_scaling(u, p);
        const double z = rmt::inverse_corrected_cdf(1.0 - pr_f, u, p);
        const double g = rmt::threshold(q, n_r, n_b, pr_f);
        std::cout << q << ',' << u << ',' << p << ',' << fmt(cs.mu) << ',' << fmt(cs.xi) << ',' << fmt(z) << ','
                  << fmt(g) << ',' << fmt(g / n_b) << '\n';
    }
    return 0;
}

int cmd_tw(const std::vector<double>& zs, int u, int p) {
    const bool corrected = u > 0 && p > 0;
    std::cout << "z,cdf,d2cdf" << (corrected ? ",corrected_cdf" : "") << '\n';
    for (double z : zs) {
        std::cout << fmt(z) << ',' << fmt(rmt::tw1_cdf(z)) << ',' << fmt(rmt::tw1_d2cdf(z));
        if (corrected) std::cout << ',' << fmt(rmt::corrected_cdf(z, u, p));
        std::cout << '\n';
    }
    return 0;
}

int cmd_flops(bool table, const std::string& model, const FlopsParams& params) {
    if (table) {
        std::cout << "group,n_fft,n_r,n_b,cp_len,proposed,ref19,ref20\n";
        for (const auto& g : kFlopsGroups)
            std::cout << g.name << ',' << g.params.n_fft << ',' << g.params.n_r << ',' << g.params.n_b << ','
                      << g.params.cp_len << ',' << flops(FlopsModel::proposed, g.params) << ','
                      << flops(FlopsModel::ref19, g.params) << ',' << flops(FlopsModel::ref20, g.params) << '\n';
        return 0;
    }
    std::cout << flops(parse_flops_model(model), params) << '\n';
    return 0;
}

int cmd_presets() {
    std::cout << "name,figure,description\n";
    for (const auto& p : harness::presets()) std::cout << p.name << ',' << p.figure << ",\"" << p.description << "\"\n";
    std::cout << "\nconfig keys:\n";
    for (const auto& [k, d] : harness::config_keys()) std::cout << "  " << std::left << std::setw(12) << k << d << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Blind identification of SFBC-OFDM signals"};
    app.require_subcommand(1);

    std::string config, preset, out, trials_out, replay;
    std::vector<std::string> sets;
    bool timing = false;
    int calibrate = 0;
    auto* sim = app.add_subcommand("simulate", "Run a Monte Carlo sweep or a figure preset");
    sim->add_option("-c,--config", config, "key = value configuration file");
    sim->add_option("-s,--set", sets, "override a configuration key (key=value), repeatable");
    sim->add_option("-p,--preset", preset, "figure preset (see `presets`)");
    sim->add_option("-o,--out", out, "summary CSV path (default stdout)");
    sim->add_option("--trials-out", trials_out, "per-trial CSV path");
    sim->add_flag("--timing", timing, "append wall-clock seconds to the summary");
    sim->add_option("--calibrate", calibrate, "pure-noise grids per point for the Pr_o / Pr_u columns");
    sim->add_option("--replay", replay, "re-run one trial: sweep,scheme,trial");

    std::string capture, allowance = "fft_size";
    double pr_f = 1e-4;
    int sto = 0;
    bool dump = false;
    auto* idf = app.add_subcommand("identify", "Identify the code of an SFBCIQ1 capture");
    idf->add_option("file", capture, "capture path")->required();
    idf->add_option("--pr-f", pr_f, "false-alarm probability");
    idf->add_option("--sto", sto, "FFT window offset in samples");
    idf->add_option("--allowance", allowance, "fft_size or tests");
    idf->add_flag("--dump-eigs", dump, "print eigenvalues, statistics and estimates per pair");

    std::string scheme = "AL", synth_out;
    double snr = 10.0;
    unsigned trial = 0;
    auto* syn = app.add_subcommand("synth", "Write a simulated capture");
    syn->add_option("-c,--config", config, "configuration file");
    syn->add_option("-s,--set", sets, "override a configuration key (key=value)");
    syn->add_option("--scheme", scheme, "transmitted code");
    syn->add_option("--snr", snr, "SNR in dB");
    syn->add_option("--trial", trial, "trial index for the random stream");
    syn->add_option("-o,--out", synth_out, "capture path")->required();

    int n_r = 8, n_b = 100;
    auto* thr = app.add_subcommand("thresholds", "Dump the serial-test thresholds");
    thr->add_option("--n-r", n_r, "receive antennas");
    thr->add_option("--n-b", n_b, "OFDM symbols");
    thr->add_option("--pr-f", pr_f, "false-alarm probability");

    std::vector<double> zs;
    int u = 0, p = 0;
    auto* tw = app.add_subcommand("tw", "Evaluate the Tracy-Widom (beta = 1) CDF");
    tw->add_option("--eval", zs, "points to evaluate")->required();
    tw->add_option("--u", u, "Wishart dimension for the corrected CDF");
    tw->add_option("--p", p, "sample count for the corrected CDF");

    bool table = false;
    std::string model = "proposed";
    FlopsParams fp;
    auto* fl = app.add_subcommand("flops", "Complexity calculator");
    fl->add_flag("--table", table, "print all four parameter groups");
    fl->add_option("--algorithm", model, "proposed, ref19 or ref20");
    fl->add_option("--n-fft", fp.n_fft);
    fl->add_option("--n-r", fp.n_r);
    fl->add_option("--n-b", fp.n_b);
    fl->add_option("--cp-len", fp.cp_len);
    fl->add_option("--card-xi", fp.card_xi, "receive-antenna pairs (default n_r (n_r - 1) / 2)");
    fl->add_option("--card-upsilon", fp.card_upsilon);

    auto* pre = app.add_subcommand("presets", "List figure presets and configuration keys");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*sim) return cmd_simulate(config, sets, preset, out, trials_out, timing, calibrate, replay);
        if (*idf) return cmd_identify(capture, pr_f, sto, allowance, dump);
        if (*syn) return cmd_synth(config, sets, scheme, snr, trial, synth_out);
        if (*thr) return cmd_thresholds(n_r, n_b, pr_f);
        if (*tw) return cmd_tw(zs, u, p);
        if (*fl) return cmd_flops(table, model, fp);
        if (*pre) return cmd_presets();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
