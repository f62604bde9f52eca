// SPDX-License-Identifier: Apache-2.0
//
// otfs-radar: delay-Doppler MIMO radar simulation and estimation toolkit.

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "otfsradar/types.hpp"

namespace otfsradar {

inline constexpr double kSpeedOfLight = 299'792'458.0; // m/s

/// OTFS frame geometry, array size and power bookkeeping shared by every
/// other module. Immutable after construction.
struct SystemConfig {
    int n_doppler = 0;             // N: Doppler bins
    int m_delay = 0;               // M: delay bins
    double delta_f_hz = 0.0;       // subcarrier spacing
    double symbol_duration_s = 0.0; // T = 1/delta_f
    int n_antennas = 0;            // N_a
    double carrier_hz = 0.0;       // f_c
    CVec beamformer;               // f_bf, length N_a, unit 2-norm
    double p_avg = 1.0;            // average power constraint
    double antenna_gain = 1.0;     // G in the radar SNR definition
    double rcs_m2 = 1.0;           // target radar cross-section
    int qam_order = 4;             // constellation used for frame generation

    double bandwidth_hz() const { return m_delay * delta_f_hz; }
    int grid_size() const { return n_doppler * m_delay; } // NM
    double frame_duration_s() const { return n_doppler * symbol_duration_s; }

    /// Default-beamformer config: f_bf = (1,...,1)/sqrt(N_a).
    static SystemConfig make(int n_doppler, int m_delay, double delta_f_hz, int n_antennas,
                             double carrier_hz);
};

/// Ground truth for one point target. Kinematics (r, v, phi) are the inputs;
/// delay, Doppler and the rotated gain h' = h e^{j2 pi nu tau} are derived.
struct TargetTruth {
    double range_m = 0.0;
    double velocity_mps = 0.0;
    double aoa_rad = 0.0;
    Complex gain{1.0, 0.0}; // h
    double delay_s = 0.0;   // tau = 2r/c
    double doppler_hz = 0.0; // nu = 2 v f_c / c
    Complex rotated_gain{1.0, 0.0}; // h'

    static TargetTruth from_kinematics(double range_m, double velocity_mps, double aoa_rad,
                                       Complex gain, double carrier_hz);
};

struct Scenario {
    SystemConfig config;
    std::vector<TargetTruth> targets;

    int target_count() const { return static_cast<int>(targets.size()); }
};

/// (tau, nu) = (2r/c, 2 v f_c / c). Total function.
std::pair<double, double> roundtrip_params(double range_m, double velocity_mps,
                                           double carrier_hz);

/// Returns the scenario unchanged when every invariant holds; otherwise
/// throws InvalidConfig listing all violations (not just the first).
Scenario validate_scenario(const Scenario& s);

// JSON serialization. Angles are degrees in files, radians internally.
Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const Scenario& s);
Scenario load_scenario(const std::string& path);
void save_scenario(const Scenario& s, const std::string& path);

/// FNV-1a hash of the canonical JSON form, for reproducibility metadata.
std::string scenario_hash(const Scenario& s);

} // namespace otfsradar
