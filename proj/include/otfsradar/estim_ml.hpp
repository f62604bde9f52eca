// SPDX-License-Identifier: Apache-2.0
//
// otfs-radar: delay-Doppler MIMO radar simulation and estimation toolkit.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "otfsradar/dd_channel.hpp"
#include "otfsradar/params.hpp"
#include "otfsradar/types.hpp"

namespace otfsradar {

/// Grid-search specification. Level 0 spans the natural resolution cells:
/// delay [0, (M-1)/(M df)] with M points, Doppler [0, (N-1)/(NT)] with N
/// points, AoA [-90, 90] degrees. Each refinement level recenters on the
/// incumbent best and shrinks the searched span by `shrink`, with
/// `points_per_axis` points per axis, clamped to the level-0 range.
struct SearchGrid {
    std::vector<double> tau_points;
    std::vector<double> nu_points;
    std::vector<double> phi_points; // used by the 3D search only
    int levels = 2;
    double shrink = 0.1;
    int points_per_axis = 11;

    /// Grid step after the final refinement level.
    double final_tau_step() const;
    double final_nu_step() const;
    double final_phi_step() const;

    /// phi_count == 0 picks the default 4 N_a + 1 angle cells.
    static SearchGrid for_config(const SystemConfig& cfg, int phi_count = 0);
};

struct TargetEstimate {
    double phi_rad = 0.0;
    double tau_s = 0.0;
    double nu_hz = 0.0;
    Complex gain{0.0, 0.0}; // h'
};

struct EstimateSet {
    std::vector<TargetEstimate> targets;              // sorted by phi ascending
    std::vector<std::vector<double>> cost_traces;     // per target, per level
    std::string method;                               // "two-step" | "sota-3d"
};

/// ML gains for fixed channels: solves the P x P system
/// x^H G_p^H (sum_q h_q G_q) x = x^H G_p^H y. Throws SingularSystem when the
/// Gram matrix condition exceeds 1e12 (near-coincident targets).
std::vector<Complex> solve_gains(const CVec& y, const CVec& x,
                                 const std::vector<CMatrix>& channels);

/// Baseline joint search: evaluates the concentrated ML objective (useful
/// minus interference) independently at every (tau, nu, phi) grid cell, with
/// per-target alternating passes for P > 1 and the same recenter-and-shrink
/// refinement as the 2D search.
EstimateSet sota_ml_search(const CVec& y, const CVec& x, const SystemConfig& cfg, int p,
                           const SearchGrid& grid);

/// Receive combining toward phi_hat: (b(phi_hat) (x) I)^H y / N_a; collapses
/// the MIMO observation onto one NM-length vector with noise variance
/// sigma_w^2 / N_a.
CVec spatial_combine(const CVec& y, double phi_hat, const SystemConfig& cfg);

/// Regularized-inverse fit of the known frame: filters the combined signal
/// with (Psi^H Psi + sigma^2 I)^{-1} Psi^H and scores ||x - a* z||^2 with the
/// closed-form complex scale a* = (z^H x)/(z^H z), which makes the objective
/// invariant to the unknown gain. ||z|| = 0 scores ||x||^2.
double lmmse_cost(const CVec& x, const CVec& y_comb, const PsiMatrix& psi, double sigma_w2);

struct DDSearchResult {
    double tau_s = 0.0;
    double nu_hz = 0.0;
    std::vector<double> cost_trace; // best cost after each level, non-increasing
};

/// 2D delay-Doppler search minimizing lmmse_cost with grid refinement.
DDSearchResult dd_search(const CVec& x, const CVec& y_comb, const SystemConfig& cfg,
                         double sigma_w2, const SearchGrid& grid);

/// The proposed estimator: Root-MUSIC AoA first, then per-AoA spatial
/// combining and the regularized 2D delay-Doppler search, gains last.
EstimateSet two_step_estimate(const CVec& y, const CVec& x, const SystemConfig& cfg, int p,
                              const SearchGrid& grid, double sigma_w2);

nlohmann::json estimate_set_to_json(const EstimateSet& set, const SearchGrid& grid,
                                    std::uint64_t seed, const std::string& config_hash);

} // namespace otfsradar
