// SPDX-License-Identifier: Apache-2.0
//
// otfs-radar: delay-Doppler MIMO radar simulation and estimation toolkit.
//
// Command-line front end: simulate / estimate / sweep / crlb.
// Exit codes: 0 ok, 2 config error, 3 I/O error, 4 estimation failure.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <numbers>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "otfsradar/crlb.hpp"
#include "otfsradar/dd_channel.hpp"
#include "otfsradar/estim_ml.hpp"
#include "otfsradar/estim_music.hpp"
#include "otfsradar/harness.hpp"
#include "otfsradar/io_format.hpp"
#include "otfsradar/otfs_signal.hpp"
#include "otfsradar/params.hpp"
#include "otfsradar/version.hpp"

namespace {

using namespace otfsradar;

constexpr double kPi = std::numbers::pi;

struct GridOptions {
    int levels = 2;
    double shrink = 0.1;
    int points_per_axis = 11;
    int phi_count = 0;

    SearchGrid build(const SystemConfig& cfg) const {
        SearchGrid g = SearchGrid::for_config(cfg, phi_count);
        g.levels = levels;
        g.shrink = shrink;
        g.points_per_axis = points_per_axis;
        return g;
    }
};

void add_grid_options(CLI::App* cmd, GridOptions& g) {
    cmd->add_option("--levels", g.levels, "grid refinement levels");
    cmd->add_option("--shrink", g.shrink, "per-level span shrink factor");
    cmd->add_option("--points-per-axis", g.points_per_axis, "points per refined axis");
    cmd->add_option("--phi-count", g.phi_count, "level-0 AoA grid points (3D search)");
}

void echo_resolved_config(const Scenario& s, const nlohmann::json& extra) {
    nlohmann::json j = scenario_to_json(s);
    j["resolved"] = extra;
    j["resolved"]["version"] = kVersion;
    j["resolved"]["config_hash"] = scenario_hash(s);
    std::cerr << "resolved config: " << j.dump() << '\n';
}

/// Missing or unreadable configuration is a config error (exit 2), unlike
/// data-file I/O problems (exit 3).
Scenario load_scenario_cli(const std::string& path) {
    try {
        return load_scenario(path);
    } catch (const IoError& e) {
        throw InvalidConfig({e.what()});
    }
}

std::vector<double> parse_snr_range(const std::string& s) {
    const auto c1 = s.find(':');
    if (c1 == std::string::npos) return {std::stod(s)};
    const auto c2 = s.find(':', c1 + 1);
    if (c2 == std::string::npos)
        throw InvalidConfig({"SNR range must be \"start:step:stop\" (inclusive)"});
    const double start = std::stod(s.substr(0, c1));
    const double step = std::stod(s.substr(c1 + 1, c2 - c1 - 1));
    const double stop = std::stod(s.substr(c2 + 1));
    if (!(step > 0.0)) throw InvalidConfig({"SNR range step must be positive"});
    std::vector<double> out;
    for (double v = start; v <= stop + 1e-9; v += step) out.push_back(v);
    return out;
}

int cmd_simulate(const std::string& config_path, std::uint64_t seed, const std::string& out_path,
                 double snr_db, bool noiseless) {
    const Scenario s = validate_scenario(load_scenario_cli(config_path));
    const double sigma_w2 = noiseless ? 0.0 : effective_noise_var(s.config, snr_db);

    const DDFrame frame = gen_dd_frame(s.config, s.config.qam_order, seed);
    const RxVector rx = simulate_rx_with_noise_var(s, frame, sigma_w2, seed);
    save_rx(rx, s.config, out_path);
    save_dd_frame(frame, out_path + ".frame");

    nlohmann::json sidecar;
    sidecar["scenario"] = scenario_to_json(s);
    sidecar["seed"] = seed;
    sidecar["snr_rad_db"] = noiseless ? nlohmann::json() : nlohmann::json(snr_db);
    sidecar["noise_var"] = sigma_w2;
    sidecar["eq27_noise_var"] =
        noiseless ? 0.0 : noise_var_from_snr(s.config, s.targets.front().range_m, snr_db);
    sidecar["config_hash"] = scenario_hash(s);
    sidecar["version"] = kVersion;
    sidecar["truth"] = nlohmann::json::array();
    for (const TargetTruth& t : s.targets)
        sidecar["truth"].push_back({{"phi_deg", t.aoa_rad * 180.0 / kPi},
                                    {"tau_s", t.delay_s},
                                    {"nu_hz", t.doppler_hz},
                                    {"h_re", t.gain.real()},
                                    {"h_im", t.gain.imag()}});
    std::ofstream side(out_path + ".json");
    if (!side) throw IoError("cannot open sidecar: " + out_path + ".json");
    side << sidecar.dump(2) << '\n';

    echo_resolved_config(s, {{"command", "simulate"},
                             {"seed", seed},
                             {"noise_var", sigma_w2},
                             {"out", out_path}});
    return 0;
}

int cmd_estimate(const std::string& rx_path, const std::string& config_path,
                 const std::string& method, const std::string& out_path, const GridOptions& gopt,
                 const std::string& spectrum_out, std::uint64_t seed) {
    const Scenario s = validate_scenario(load_scenario_cli(config_path));
    int n = 0, m = 0, na = 0;
    const RxVector rx = load_rx(rx_path, &n, &m, &na);
    if (n != s.config.n_doppler || m != s.config.m_delay || na != s.config.n_antennas)
        throw InvalidConfig({"received-vector dimensions do not match the scenario config"});

    const DDFrame frame = load_dd_frame(rx_path + ".frame");
    const CVec x = vectorize(frame);
    const SearchGrid grid = gopt.build(s.config);
    const int p = s.target_count();

    echo_resolved_config(s, {{"command", "estimate"}, {"method", method}, {"rx", rx_path}});

    EstimateSet est;
    if (method == "two-step") {
        est = two_step_estimate(rx.samples, x, s.config, p, grid, rx.noise_var);
    } else if (method == "sota-3d") {
        est = sota_ml_search(rx.samples, x, s.config, p, grid);
    } else {
        throw InvalidConfig({"--method must be two-step or sota-3d"});
    }

    if (!spectrum_out.empty()) {
        const CMatrix u = unstack(rx.samples, s.config.n_antennas);
        const NoiseProjector proj = noise_projector(covariance(u), p);
        std::vector<double> angles;
        for (double a = -90.0; a <= 90.0 + 1e-9; a += 0.1) angles.push_back(a * kPi / 180.0);
        write_spectrum_csv(spectral_music(proj.c, angles, p), spectrum_out);
    }

    nlohmann::json j = estimate_set_to_json(est, grid, seed, scenario_hash(s));
    j["version"] = kVersion;
    j["noise_var"] = rx.noise_var;
    std::ofstream out(out_path);
    if (!out) throw IoError("cannot open output file: " + out_path);
    out << j.dump(2) << '\n';
    return 0;
}

int cmd_sweep(const std::string& spec_path, const std::string& out_csv,
              const std::string& out_json, int threads) {
    std::ifstream in(spec_path);
    if (!in) throw IoError("cannot open sweep spec: " + spec_path);
    nlohmann::json sj;
    try {
        in >> sj;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidConfig({std::string("JSON parse error in ") + spec_path + ": " + e.what()});
    }
    const SweepSpec spec = sweep_spec_from_json(sj);
    echo_resolved_config(spec.scenario,
                         {{"command", "sweep"},
                          {"master_seed", spec.master_seed},
                          {"trials", spec.trials},
                          {"methods", spec.methods},
                          {"threads", threads}});
    const RmseTable table = run_sweep(spec, threads);
    write_rmse_csv(table, out_csv);
    if (!out_json.empty()) {
        std::ofstream jo(out_json);
        if (!jo) throw IoError("cannot open output file: " + out_json);
        jo << rmse_table_to_json(table).dump(2) << '\n';
    }

    // reproducibility sidecar: the CSV schema is fixed, so the metadata
    // needed to regenerate it byte-for-byte goes next to it
    nlohmann::json meta;
    meta["spec"] = sj;
    meta["master_seed"] = spec.master_seed;
    meta["config_hash"] = scenario_hash(spec.scenario);
    meta["version"] = kVersion;
    std::ofstream mo(out_csv + ".meta.json");
    if (!mo) throw IoError("cannot open sidecar: " + out_csv + ".meta.json");
    mo << meta.dump(2) << '\n';
    return 0;
}

int cmd_crlb(const std::string& config_path, const std::string& snr_range,
             const std::string& out_csv, std::uint64_t seed, const GridOptions& gopt) {
    const Scenario s = validate_scenario(load_scenario_cli(config_path));
    const std::vector<double> snrs = parse_snr_range(snr_range);
    const SearchGrid grid = gopt.build(s.config);
    const DDFrame frame = gen_dd_frame(s.config, s.config.qam_order, seed);

    echo_resolved_config(s, {{"command", "crlb"}, {"seed", seed}});

    std::vector<TargetParams> tps;
    for (const TargetTruth& t : s.targets) tps.push_back(TargetParams::from_truth(t));

    std::vector<CrlbSweepRow> rows;
    for (double snr : snrs) {
        const double n0 = effective_noise_var(s.config, snr);
        const FisherMatrix fim = fisher(tps, s.config, frame, n0);
        const CrlbReport rep = crlb_bounds(fim, grid);
        CrlbSweepRow row;
        row.snr_db = snr;
        for (std::size_t t = 0; t < tps.size(); ++t) {
            row.crlb_tau_s2 = std::max(row.crlb_tau_s2, rep.var_tau_s2[t]);
            row.crlb_nu_hz2 = std::max(row.crlb_nu_hz2, rep.var_nu_hz2[t]);
            row.crlb_phi_rad2 = std::max(row.crlb_phi_rad2, rep.var_phi_rad2[t]);
        }
        row.floor_tau_s = rep.floor_tau_s;
        row.floor_nu_hz = rep.floor_nu_hz;
        rows.push_back(row);
    }
    write_crlb_csv(rows, out_csv);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"mono-static MIMO-OTFS radar: simulation, estimation, benchmarking"};
    app.require_subcommand(1);

    // simulate
    std::string sim_config, sim_out;
    std::uint64_t sim_seed = 0;
    double sim_snr = 0.0;
    bool sim_noiseless = false;
    auto* sim = app.add_subcommand("simulate", "synthesize a received vector");
    sim->add_option("--config", sim_config, "scenario JSON")->required();
    sim->add_option("--seed", sim_seed, "random seed");
    sim->add_option("--out", sim_out, "output OTFR file")->required();
    auto* snr_opt = sim->add_option("--snr-db", sim_snr, "radar SNR in dB");
    sim->add_flag("--noiseless", sim_noiseless, "disable noise");

    // estimate
    std::string est_rx, est_config, est_method = "two-step", est_out, est_spectrum;
    std::uint64_t est_seed = 0;
    GridOptions est_grid;
    auto* est = app.add_subcommand("estimate", "recover target parameters from a received vector");
    est->add_option("--rx", est_rx, "OTFR input file")->required();
    est->add_option("--config", est_config, "scenario JSON")->required();
    est->add_option("--method", est_method, "two-step | sota-3d");
    est->add_option("--out", est_out, "output estimate JSON")->required();
    est->add_option("--spectrum-out", est_spectrum, "also export the MUSIC pseudo-spectrum CSV");
    est->add_option("--seed", est_seed, "seed recorded in the output metadata");
    add_grid_options(est, est_grid);

    // sweep
    std::string sweep_spec, sweep_out, sweep_json;
    int sweep_threads = 0;
    auto* swp = app.add_subcommand("sweep", "Monte-Carlo RMSE vs SNR benchmark");
    swp->add_option("--spec", sweep_spec, "sweep spec JSON")->required();
    swp->add_option("--out", sweep_out, "output CSV")->required();
    swp->add_option("--json", sweep_json, "optional JSON copy of the table");
    swp->add_option("--threads", sweep_threads, "worker threads (0 = auto)");

    // crlb
    std::string crlb_config, crlb_snr, crlb_out;
    std::uint64_t crlb_seed = 0;
    GridOptions crlb_grid;
    auto* crl = app.add_subcommand("crlb", "Cramer-Rao bounds and resolution floors vs SNR");
    crl->add_option("--config", crlb_config, "scenario JSON")->required();
    crl->add_option("--snr", crlb_snr, "SNR list \"start:step:stop\" (dB, inclusive)")->required();
    crl->add_option("--out", crlb_out, "output CSV")->required();
    crl->add_option("--seed", crlb_seed, "frame seed");
    add_grid_options(crl, crlb_grid);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (sim->parsed()) {
            if (!sim_noiseless && snr_opt->count() == 0)
                throw InvalidConfig({"simulate needs --snr-db or --noiseless"});
            return cmd_simulate(sim_config, sim_seed, sim_out, sim_snr, sim_noiseless);
        }
        if (est->parsed())
            return cmd_estimate(est_rx, est_config, est_method, est_out, est_grid, est_spectrum,
                                est_seed);
        if (swp->parsed()) return cmd_sweep(sweep_spec, sweep_out, sweep_json, sweep_threads);
        if (crl->parsed()) return cmd_crlb(crlb_config, crlb_snr, crlb_out, crlb_seed, crlb_grid);
    } catch (const InvalidConfig& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const UnsupportedConstellation& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return 3;
    } catch (const Error& e) {
        nlohmann::json err{{"error", {{"type", "estimation_failure"}, {"message", e.what()}}}};
        std::cerr << err.dump() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
