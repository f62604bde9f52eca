// SPDX-License-Identifier: Apache-2.0
//
// otfs-radar: delay-Doppler MIMO radar simulation and estimation toolkit.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "otfsradar/crlb.hpp"
#include "otfsradar/estim_ml.hpp"
#include "otfsradar/params.hpp"

namespace otfsradar {

/// Monte-Carlo sweep specification. Per (snr, trial) the frame, gain phases
/// and noise come from counter-based streams keyed on
/// (master_seed, snr index, trial), so output is byte-identical for any
/// thread count and execution order.
struct SweepSpec {
    Scenario scenario;
    std::vector<double> snr_db;        // strictly increasing
    int trials = 1;
    std::vector<std::string> methods;  // subset of {"two-step", "sota-3d"}
    SearchGrid grid;
    std::uint64_t master_seed = 0;
    bool noiseless = false;            // variance-isolation override
    bool redraw_frames = true;         // fresh data payload per trial
    bool randomize_gain_phase = true;  // unit-magnitude, uniform-phase gains
};

struct RmseRow {
    double snr_db = 0.0;
    std::string method;
    double rmse_phi_deg = 0.0;
    double rmse_tau_s = 0.0;
    double rmse_nu_hz = 0.0;
    double crlb_phi_deg = 0.0; // sqrt of the bound, same units as the RMSE
    double crlb_tau_s = 0.0;
    double crlb_nu_hz = 0.0;
    double floor_tau_s = 0.0;
    double floor_nu_hz = 0.0;
    int trials = 0;
    int failures = 0;
};

struct RmseTable {
    std::vector<RmseRow> rows;
};

/// Per-parameter RMSE over paired estimate/truth lists. Angle errors are
/// wrapped to [-90, 90] degrees.
struct ParamRmse {
    double phi_rad = 0.0;
    double tau_s = 0.0;
    double nu_hz = 0.0;
};
ParamRmse rmse(std::span<const TargetEstimate> estimates,
               std::span<const TargetTruth> truths); // LengthMismatch

/// Greedy nearest-AoA assignment of one trial's estimates to the truths,
/// ties broken by index order. Returns truth index per estimate.
std::vector<std::size_t> match_by_aoa(std::span<const TargetEstimate> estimates,
                                      std::span<const TargetTruth> truths);

/// Runs the Monte-Carlo sweep. threads == 0 uses OTFS_RADAR_THREADS or the
/// hardware concurrency. Per-trial estimator failures are counted, excluded
/// from the RMSE, and reported in the `failures` column.
RmseTable run_sweep(const SweepSpec& spec, int threads = 0);

// CSV schema (exact header):
// snr_db,method,rmse_phi_deg,rmse_tau_s,rmse_nu_hz,crlb_phi_deg,crlb_tau_s,
// crlb_nu_hz,floor_tau_s,floor_nu_hz,trials,failures
std::string rmse_table_to_csv(const RmseTable& table);
void write_rmse_csv(const RmseTable& table, const std::string& path);
nlohmann::json rmse_table_to_json(const RmseTable& table);
RmseTable rmse_table_from_json(const nlohmann::json& j);

SweepSpec sweep_spec_from_json(const nlohmann::json& j);

} // namespace otfsradar
