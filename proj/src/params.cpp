// SPDX-License-Identifier: Apache-2.0
//
// otfs-radar: delay-Doppler MIMO radar simulation and estimation toolkit.

#include "otfsradar/params.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "otfsradar/kernels.hpp"

namespace otfsradar {

namespace {

constexpr double kPi = std::numbers::pi;

void check_known_keys(const nlohmann::json& j, std::initializer_list<const char*> known,
                      const char* where, std::vector<std::string>& errs) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : known)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok) errs.push_back(std::string("unknown key \"") + it.key() + "\" in " + where);
    }
}

} // namespace

SystemConfig SystemConfig::make(int n_doppler, int m_delay, double delta_f_hz, int n_antennas,
                                double carrier_hz) {
    SystemConfig c;
    c.n_doppler = n_doppler;
    c.m_delay = m_delay;
    c.delta_f_hz = delta_f_hz;
    c.symbol_duration_s = 1.0 / delta_f_hz;
    c.n_antennas = n_antennas;
    c.carrier_hz = carrier_hz;
    c.beamformer.assign(static_cast<std::size_t>(n_antennas),
                        Complex{1.0 / std::sqrt(static_cast<double>(n_antennas)), 0.0});
    return c;
}

TargetTruth TargetTruth::from_kinematics(double range_m, double velocity_mps, double aoa_rad,
                                         Complex gain, double carrier_hz) {
    TargetTruth t;
    t.range_m = range_m;
    t.velocity_mps = velocity_mps;
    t.aoa_rad = aoa_rad;
    t.gain = gain;
    auto [tau, nu] = roundtrip_params(range_m, velocity_mps, carrier_hz);
    t.delay_s = tau;
    t.doppler_hz = nu;
    t.rotated_gain = gain * std::polar(1.0, 2.0 * kPi * nu * tau);
    return t;
}

std::pair<double, double> roundtrip_params(double range_m, double velocity_mps,
                                           double carrier_hz) {
    return {2.0 * range_m / kSpeedOfLight, 2.0 * velocity_mps * carrier_hz / kSpeedOfLight};
}

Scenario validate_scenario(const Scenario& s) {
    std::vector<std::string> errs;
    const SystemConfig& c = s.config;

    if (c.n_doppler < 2) errs.push_back("N: Doppler bin count must be >= 2");
    if (c.m_delay < 2) errs.push_back("M: delay bin count must be >= 2");
    if (c.n_antennas < 2) errs.push_back("N_a: antenna count must be >= 2");
    if (!(c.delta_f_hz > 0.0)) errs.push_back("delta_f: subcarrier spacing must be positive");
    if (!(c.carrier_hz > 0.0)) errs.push_back("f_c: carrier frequency must be positive");
    if (c.delta_f_hz > 0.0 &&
        std::abs(c.symbol_duration_s * c.delta_f_hz - 1.0) > 8.0 * std::numeric_limits<double>::epsilon())
        errs.push_back("T: symbol duration must equal 1/delta_f");
    if (static_cast<int>(c.beamformer.size()) != c.n_antennas) {
        errs.push_back("f_bf: beamformer length must equal N_a");
    } else {
        const double nrm = std::sqrt(kernels::cnrm2sq(c.beamformer));
        if (std::abs(nrm - 1.0) > 1e-9) errs.push_back("f_bf: beamformer must have unit 2-norm");
    }
    if (!(c.p_avg > 0.0)) errs.push_back("P_avg: average power must be positive");
    if (c.qam_order != 4 && c.qam_order != 16 && c.qam_order != 64)
        errs.push_back("qam_order: must be one of 4, 16, 64");

    const int p = s.target_count();
    if (p < 1) errs.push_back("targets: at least one target required");
    if (p >= c.n_antennas)
        errs.push_back("targets: target count must be < N_a (MUSIC noise subspace would be empty)");

    const double frame = c.n_doppler * c.symbol_duration_s;
    for (int i = 0; i < p; ++i) {
        const TargetTruth& t = s.targets[static_cast<std::size_t>(i)];
        const std::string tag = "targets[" + std::to_string(i) + "]";
        if (t.range_m < 0.0) errs.push_back(tag + ".r: range must be >= 0");
        if (std::abs(t.aoa_rad) > kPi / 2.0 + 1e-12)
            errs.push_back(tag + ".phi: AoA must lie in [-90, 90] degrees");
        auto [tau, nu] = roundtrip_params(t.range_m, t.velocity_mps, c.carrier_hz);
        if (std::abs(t.delay_s - tau) > 1e-15 + 1e-12 * std::abs(tau))
            errs.push_back(tag + ".tau: inconsistent with 2r/c");
        if (std::abs(t.doppler_hz - nu) > 1e-9 + 1e-12 * std::abs(nu))
            errs.push_back(tag + ".nu: inconsistent with 2 v f_c / c");
        if (!(t.delay_s < frame)) errs.push_back(tag + ".tau: delay must be < N*T (one frame)");
    }

    if (!errs.empty()) throw InvalidConfig(std::move(errs));
    return s;
}

Scenario scenario_from_json(const nlohmann::json& j) {
    std::vector<std::string> errs;
    check_known_keys(j,
                     {"N", "M", "delta_f_hz", "N_a", "f_c_hz", "f_bf_real", "f_bf_imag",
                      "targets", "p_avg", "antenna_gain_g", "rcs_m2", "qam_order"},
                     "scenario", errs);
    for (const char* req : {"N", "M", "delta_f_hz", "N_a", "f_c_hz", "targets"})
        if (!j.contains(req)) errs.push_back(std::string("missing required key \"") + req + "\"");
    if (!errs.empty()) throw InvalidConfig(std::move(errs));

    SystemConfig cfg = SystemConfig::make(j.at("N").get<int>(), j.at("M").get<int>(),
                                          j.at("delta_f_hz").get<double>(), j.at("N_a").get<int>(),
                                          j.at("f_c_hz").get<double>());
    if (j.contains("p_avg")) cfg.p_avg = j.at("p_avg").get<double>();
    if (j.contains("antenna_gain_g")) cfg.antenna_gain = j.at("antenna_gain_g").get<double>();
    if (j.contains("rcs_m2")) cfg.rcs_m2 = j.at("rcs_m2").get<double>();
    if (j.contains("qam_order")) cfg.qam_order = j.at("qam_order").get<int>();

    if (j.contains("f_bf_real") != j.contains("f_bf_imag"))
        throw InvalidConfig({"f_bf_real and f_bf_imag must be given together"});
    if (j.contains("f_bf_real")) {
        const auto re = j.at("f_bf_real").get<std::vector<double>>();
        const auto im = j.at("f_bf_imag").get<std::vector<double>>();
        if (re.size() != im.size())
            throw InvalidConfig({"f_bf_real and f_bf_imag must have equal length"});
        cfg.beamformer.clear();
        for (std::size_t i = 0; i < re.size(); ++i) cfg.beamformer.emplace_back(re[i], im[i]);
    }

    Scenario s;
    s.config = cfg;
    for (const auto& tj : j.at("targets")) {
        std::vector<std::string> terrs;
        check_known_keys(tj, {"r_m", "v_mps", "phi_deg", "h_real", "h_imag"}, "target", terrs);
        for (const char* req : {"r_m", "v_mps", "phi_deg"})
            if (!tj.contains(req))
                terrs.push_back(std::string("missing required target key \"") + req + "\"");
        if (!terrs.empty()) throw InvalidConfig(std::move(terrs));
        const Complex h{tj.value("h_real", 1.0), tj.value("h_imag", 0.0)};
        s.targets.push_back(TargetTruth::from_kinematics(
            tj.at("r_m").get<double>(), tj.at("v_mps").get<double>(),
            tj.at("phi_deg").get<double>() * kPi / 180.0, h, cfg.carrier_hz));
    }
    return s;
}

nlohmann::json scenario_to_json(const Scenario& s) {
    nlohmann::json j;
    j["N"] = s.config.n_doppler;
    j["M"] = s.config.m_delay;
    j["delta_f_hz"] = s.config.delta_f_hz;
    j["N_a"] = s.config.n_antennas;
    j["f_c_hz"] = s.config.carrier_hz;
    std::vector<double> re, im;
    for (const Complex& f : s.config.beamformer) {
        re.push_back(f.real());
        im.push_back(f.imag());
    }
    j["f_bf_real"] = re;
    j["f_bf_imag"] = im;
    j["p_avg"] = s.config.p_avg;
    j["antenna_gain_g"] = s.config.antenna_gain;
    j["rcs_m2"] = s.config.rcs_m2;
    j["qam_order"] = s.config.qam_order;
    j["targets"] = nlohmann::json::array();
    for (const TargetTruth& t : s.targets) {
        j["targets"].push_back({{"r_m", t.range_m},
                                {"v_mps", t.velocity_mps},
                                {"phi_deg", t.aoa_rad * 180.0 / kPi},
                                {"h_real", t.gain.real()},
                                {"h_imag", t.gain.imag()}});
    }
    return j;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open scenario file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidConfig({std::string("JSON parse error in ") + path + ": " + e.what()});
    }
    return scenario_from_json(j);
}

void save_scenario(const Scenario& s, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open output file: " + path);
    out << scenario_to_json(s).dump(2) << '\n';
    if (!out) throw IoError("write failed: " + path);
}

std::string scenario_hash(const Scenario& s) {
    const std::string dump = scenario_to_json(s).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : dump) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

} // namespace otfsradar
