// SPDX-License-Identifier: Apache-2.0
//
// otfs-radar: delay-Doppler MIMO radar simulation and estimation toolkit.

#include "otfsradar/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <thread>

#include "otfsradar/dd_channel.hpp"
#include "otfsradar/io_format.hpp"
#include "otfsradar/otfs_signal.hpp"
#include "otfsradar/rng.hpp"

namespace otfsradar {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap_angle_error_rad(double e) {
    // fold into [-pi/2, pi/2] (i.e. [-90, 90] degrees)
    while (e > kPi / 2.0) e -= kPi;
    while (e < -kPi / 2.0) e += kPi;
    return e;
}

int resolve_threads(int threads) {
    // the environment knob wins over the --threads flag
    if (const char* env = std::getenv("OTFS_RADAR_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    if (threads > 0) return threads;
    const unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

/// Deterministic parallel map: worker threads pull indices from a shared
/// counter, results land in preallocated slots, so the outcome does not
/// depend on scheduling.
template <typename Fn> void parallel_for(std::size_t count, int threads, Fn&& fn) {
    if (threads <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    const int nworkers = std::min<std::size_t>(static_cast<std::size_t>(threads), count);
    std::exception_ptr first_error;
    std::mutex err_mutex;
    for (int w = 0; w < nworkers; ++w)
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

struct TrialErrors {
    bool failed = false;
    // squared errors for each target, aligned to the truth ordering
    std::vector<double> phi_sq, tau_sq, nu_sq;
};

void validate_spec(const SweepSpec& spec) {
    std::vector<std::string> errs;
    if (spec.trials < 1) errs.push_back("trials must be >= 1");
    if (spec.snr_db.empty()) errs.push_back("snr_db list must be non-empty");
    for (std::size_t i = 1; i < spec.snr_db.size(); ++i)
        if (!(spec.snr_db[i] > spec.snr_db[i - 1]))
            errs.push_back("snr_db list must be strictly increasing");
    if (spec.methods.empty()) errs.push_back("methods list must be non-empty");
    for (const std::string& m : spec.methods)
        if (m != "two-step" && m != "sota-3d") errs.push_back("unknown method \"" + m + "\"");
    if (!errs.empty()) throw InvalidConfig(std::move(errs));
    validate_scenario(spec.scenario);
}

} // namespace

std::vector<std::size_t> match_by_aoa(std::span<const TargetEstimate> estimates,
                                      std::span<const TargetTruth> truths) {
    const std::size_t n = estimates.size();
    if (n != truths.size()) throw LengthMismatch("match_by_aoa: unequal list lengths");
    std::vector<std::size_t> assign(n, n);
    std::vector<bool> est_used(n, false), truth_used(n, false);
    for (std::size_t round = 0; round < n; ++round) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t bi = 0, bj = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (est_used[i]) continue;
            for (std::size_t j = 0; j < n; ++j) {
                if (truth_used[j]) continue;
                const double d =
                    std::abs(wrap_angle_error_rad(estimates[i].phi_rad - truths[j].aoa_rad));
                if (d < best) {
                    best = d;
                    bi = i;
                    bj = j;
                }
            }
        }
        assign[bi] = bj;
        est_used[bi] = true;
        truth_used[bj] = true;
    }
    return assign;
}

ParamRmse rmse(std::span<const TargetEstimate> estimates, std::span<const TargetTruth> truths) {
    if (estimates.size() != truths.size()) throw LengthMismatch("rmse: unequal list lengths");
    if (estimates.empty()) return {};
    double sp = 0.0, st = 0.0, sn = 0.0;
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        const double ep = wrap_angle_error_rad(estimates[i].phi_rad - truths[i].aoa_rad);
        const double et = estimates[i].tau_s - truths[i].delay_s;
        const double en = estimates[i].nu_hz - truths[i].doppler_hz;
        sp += ep * ep;
        st += et * et;
        sn += en * en;
    }
    const double inv = 1.0 / static_cast<double>(estimates.size());
    return {std::sqrt(sp * inv), std::sqrt(st * inv), std::sqrt(sn * inv)};
}

RmseTable run_sweep(const SweepSpec& spec, int threads) {
    validate_spec(spec);
    const int nthreads = resolve_threads(threads);
    const Scenario& base = spec.scenario;
    const SystemConfig& cfg = base.config;
    const int p = base.target_count();

    RmseTable table;
    for (std::size_t si = 0; si < spec.snr_db.size(); ++si) {
        const double snr = spec.snr_db[si];
        const double sigma_w2 = spec.noiseless ? 0.0 : effective_noise_var(cfg, snr);

        // Per-trial work items: simulate once, run every method.
        const std::size_t nm = static_cast<std::size_t>(spec.methods.size());
        std::vector<std::vector<TrialErrors>> results(
            nm, std::vector<TrialErrors>(static_cast<std::size_t>(spec.trials)));

        parallel_for(static_cast<std::size_t>(spec.trials), nthreads, [&](std::size_t trial) {
            const std::uint64_t frame_trial = spec.redraw_frames ? trial : 0;
            const std::uint64_t frame_seed =
                CounterRng::derive({spec.master_seed, si, frame_trial, rng_stream::frame});
            const DDFrame frame = gen_dd_frame(cfg, cfg.qam_order, frame_seed);

            Scenario s = base;
            if (spec.randomize_gain_phase) {
                const CounterRng grng(
                    CounterRng::derive({spec.master_seed, si, trial, rng_stream::gain}));
                for (std::size_t t = 0; t < s.targets.size(); ++t) {
                    const TargetTruth& old = s.targets[t];
                    const Complex h = std::polar(1.0, 2.0 * kPi * grng.uniform01(t));
                    s.targets[t] = TargetTruth::from_kinematics(
                        old.range_m, old.velocity_mps, old.aoa_rad, h, cfg.carrier_hz);
                }
            }

            const std::uint64_t noise_seed =
                CounterRng::derive({spec.master_seed, si, trial, rng_stream::noise});
            const RxVector rx = simulate_rx_with_noise_var(s, frame, sigma_w2, noise_seed);
            const CVec x = vectorize(frame);

            for (std::size_t mi = 0; mi < nm; ++mi) {
                TrialErrors& te = results[mi][trial];
                try {
                    const EstimateSet est =
                        spec.methods[mi] == "two-step"
                            ? two_step_estimate(rx.samples, x, cfg, p, spec.grid, sigma_w2)
                            : sota_ml_search(rx.samples, x, cfg, p, spec.grid);
                    const auto assign = match_by_aoa(est.targets, s.targets);
                    te.phi_sq.assign(static_cast<std::size_t>(p), 0.0);
                    te.tau_sq.assign(static_cast<std::size_t>(p), 0.0);
                    te.nu_sq.assign(static_cast<std::size_t>(p), 0.0);
                    for (std::size_t i = 0; i < est.targets.size(); ++i) {
                        const TargetTruth& tr = s.targets[assign[i]];
                        const double ep =
                            wrap_angle_error_rad(est.targets[i].phi_rad - tr.aoa_rad);
                        const double et = est.targets[i].tau_s - tr.delay_s;
                        const double en = est.targets[i].nu_hz - tr.doppler_hz;
                        te.phi_sq[assign[i]] = ep * ep;
                        te.tau_sq[assign[i]] = et * et;
                        te.nu_sq[assign[i]] = en * en;
                    }
                } catch (const Error&) {
                    te.failed = true;
                }
            }
        });

        // CRLB reference at this SNR: trial-0 frame, truth parameters.
        double crlb_phi = 0.0, crlb_tau = 0.0, crlb_nu = 0.0;
        double floor_tau = spec.grid.final_tau_step() / std::sqrt(12.0);
        double floor_nu = spec.grid.final_nu_step() / std::sqrt(12.0);
        if (!spec.noiseless) {
            const std::uint64_t frame_seed =
                CounterRng::derive({spec.master_seed, si, 0, rng_stream::frame});
            const DDFrame frame = gen_dd_frame(cfg, cfg.qam_order, frame_seed);
            std::vector<TargetParams> tps;
            for (const TargetTruth& t : base.targets) tps.push_back(TargetParams::from_truth(t));
            const FisherMatrix fim = fisher(tps, cfg, frame, sigma_w2);
            const CrlbReport rep = crlb_bounds(fim, spec.grid);
            // worst-case target, reported as an RMSE-comparable value
            for (std::size_t t = 0; t < tps.size(); ++t) {
                crlb_phi = std::max(crlb_phi, std::sqrt(rep.var_phi_rad2[t]));
                crlb_tau = std::max(crlb_tau, std::sqrt(rep.var_tau_s2[t]));
                crlb_nu = std::max(crlb_nu, std::sqrt(rep.var_nu_hz2[t]));
            }
        }

        for (std::size_t mi = 0; mi < nm; ++mi) {
            // ordered reduction over trials keeps the sums bit-reproducible
            double sp = 0.0, st = 0.0, sn = 0.0;
            int failures = 0, ok = 0;
            for (int trial = 0; trial < spec.trials; ++trial) {
                const TrialErrors& te = results[mi][static_cast<std::size_t>(trial)];
                if (te.failed) {
                    ++failures;
                    continue;
                }
                ++ok;
                for (int t = 0; t < p; ++t) {
                    sp += te.phi_sq[static_cast<std::size_t>(t)];
                    st += te.tau_sq[static_cast<std::size_t>(t)];
                    sn += te.nu_sq[static_cast<std::size_t>(t)];
                }
            }
            RmseRow row;
            row.snr_db = snr;
            row.method = spec.methods[mi];
            const double denom = static_cast<double>(std::max(ok, 1) * p);
            row.rmse_phi_deg = std::sqrt(sp / denom) * 180.0 / kPi;
            row.rmse_tau_s = std::sqrt(st / denom);
            row.rmse_nu_hz = std::sqrt(sn / denom);
            row.crlb_phi_deg = crlb_phi * 180.0 / kPi;
            row.crlb_tau_s = crlb_tau;
            row.crlb_nu_hz = crlb_nu;
            row.floor_tau_s = floor_tau;
            row.floor_nu_hz = floor_nu;
            row.trials = spec.trials;
            row.failures = failures;
            table.rows.push_back(std::move(row));
        }
    }
    return table;
}

std::string rmse_table_to_csv(const RmseTable& table) {
    std::string out = "snr_db,method,rmse_phi_deg,rmse_tau_s,rmse_nu_hz,crlb_phi_deg,"
                      "crlb_tau_s,crlb_nu_hz,floor_tau_s,floor_nu_hz,trials,failures\n";
    for (const RmseRow& r : table.rows) {
        out += format_double(r.snr_db);
        out += ',' + r.method;
        for (double v : {r.rmse_phi_deg, r.rmse_tau_s, r.rmse_nu_hz, r.crlb_phi_deg,
                         r.crlb_tau_s, r.crlb_nu_hz, r.floor_tau_s, r.floor_nu_hz})
            out += ',' + format_double(v);
        out += ',' + std::to_string(r.trials);
        out += ',' + std::to_string(r.failures);
        out += '\n';
    }
    return out;
}

void write_rmse_csv(const RmseTable& table, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open output file: " + path);
    out << rmse_table_to_csv(table);
    if (!out) throw IoError("write failed: " + path);
}

nlohmann::json rmse_table_to_json(const RmseTable& table) {
    nlohmann::json rows = nlohmann::json::array();
    for (const RmseRow& r : table.rows)
        rows.push_back({{"snr_db", r.snr_db},
                        {"method", r.method},
                        {"rmse_phi_deg", r.rmse_phi_deg},
                        {"rmse_tau_s", r.rmse_tau_s},
                        {"rmse_nu_hz", r.rmse_nu_hz},
                        {"crlb_phi_deg", r.crlb_phi_deg},
                        {"crlb_tau_s", r.crlb_tau_s},
                        {"crlb_nu_hz", r.crlb_nu_hz},
                        {"floor_tau_s", r.floor_tau_s},
                        {"floor_nu_hz", r.floor_nu_hz},
                        {"trials", r.trials},
                        {"failures", r.failures}});
    return nlohmann::json{{"rows", rows}};
}

RmseTable rmse_table_from_json(const nlohmann::json& j) {
    RmseTable t;
    for (const auto& rj : j.at("rows")) {
        RmseRow r;
        r.snr_db = rj.at("snr_db").get<double>();
        r.method = rj.at("method").get<std::string>();
        r.rmse_phi_deg = rj.at("rmse_phi_deg").get<double>();
        r.rmse_tau_s = rj.at("rmse_tau_s").get<double>();
        r.rmse_nu_hz = rj.at("rmse_nu_hz").get<double>();
        r.crlb_phi_deg = rj.at("crlb_phi_deg").get<double>();
        r.crlb_tau_s = rj.at("crlb_tau_s").get<double>();
        r.crlb_nu_hz = rj.at("crlb_nu_hz").get<double>();
        r.floor_tau_s = rj.at("floor_tau_s").get<double>();
        r.floor_nu_hz = rj.at("floor_nu_hz").get<double>();
        r.trials = rj.at("trials").get<int>();
        r.failures = rj.at("failures").get<int>();
        t.rows.push_back(std::move(r));
    }
    return t;
}

SweepSpec sweep_spec_from_json(const nlohmann::json& j) {
    SweepSpec spec;
    spec.scenario = scenario_from_json(j.at("scenario"));
    if (j.at("snr_db").is_string()) {
        // "start:step:stop", inclusive
        const std::string s = j.at("snr_db").get<std::string>();
        const auto c1 = s.find(':'), c2 = s.rfind(':');
        if (c1 == std::string::npos || c2 == c1)
            throw InvalidConfig({"snr_db range must be \"start:step:stop\""});
        const double start = std::stod(s.substr(0, c1));
        const double step = std::stod(s.substr(c1 + 1, c2 - c1 - 1));
        const double stop = std::stod(s.substr(c2 + 1));
        if (!(step > 0.0)) throw InvalidConfig({"snr_db range step must be positive"});
        for (double v = start; v <= stop + 1e-9; v += step) spec.snr_db.push_back(v);
    } else {
        spec.snr_db = j.at("snr_db").get<std::vector<double>>();
    }
    spec.trials = j.value("trials", 1);
    spec.methods = j.value("methods", std::vector<std::string>{"two-step", "sota-3d"});
    spec.master_seed = j.value("master_seed", 0ULL);
    spec.noiseless = j.value("noiseless", false);
    spec.redraw_frames = j.value("redraw_frames", true);
    spec.randomize_gain_phase = j.value("randomize_gain_phase", true);

    SearchGrid grid = SearchGrid::for_config(spec.scenario.config,
                                             j.contains("grid") ? j["grid"].value("phi_count", 0)
                                                                : 0);
    if (j.contains("grid")) {
        const auto& gj = j.at("grid");
        grid.levels = gj.value("levels", grid.levels);
        grid.shrink = gj.value("shrink", grid.shrink);
        grid.points_per_axis = gj.value("points_per_axis", grid.points_per_axis);
    }
    spec.grid = grid;
    return spec;
}

} // namespace otfsradar
