// SPDX-License-Identifier: Apache-2.0
//
// otfs-radar: delay-Doppler MIMO radar simulation and estimation toolkit.

#pragma once

#include <string>
#include <vector>

#include "otfsradar/estim_ml.hpp"
#include "otfsradar/otfs_signal.hpp"
#include "otfsradar/params.hpp"
#include "otfsradar/types.hpp"

namespace otfsradar {

/// One target's parameters in the estimation ordering (A, psi, tau, nu, phi):
/// amplitude and phase of h', delay, Doppler, AoA.
struct TargetParams {
    double amplitude = 1.0; // A = |h'|
    double phase = 0.0;     // psi = arg(h')
    double tau_s = 0.0;
    double nu_hz = 0.0;
    double phi_rad = 0.0;

    static TargetParams from_truth(const TargetTruth& t);
};

/// Noiseless per-target receive tensor, flattened antenna-major like the
/// received vector: s[t*NM + k*M + l] = A e^{j psi} b_t(phi) (a^H(phi) f_bf)
/// (Psi(tau,nu) x)[k*M + l].
CVec signal_model_s(const TargetParams& tp, const SystemConfig& cfg, const DDFrame& frame);

/// 5P x 5P Fisher information, (2/N0) Re{J^H J} with J the Jacobian of the
/// stacked signal model. dA and dpsi columns are analytic; tau/nu/phi columns
/// use second-order central differences with steps scaled to the natural
/// resolutions (1e-4 cells for tau and nu, 1e-6 rad for phi).
struct FisherMatrix {
    std::vector<double> data; // row-major, dim x dim
    std::size_t dim = 0;
    double n0 = 0.0;

    double at(std::size_t i, std::size_t j) const { return data[i * dim + j]; }
};
FisherMatrix fisher(const std::vector<TargetParams>& targets, const SystemConfig& cfg,
                    const DDFrame& frame, double n0);
// errors: StepUnderflow if a difference step rounds away

/// Diagonal of the inverse Fisher matrix per parameter, plus the grid
/// resolution floors (final grid step / sqrt(12), the uniform-quantization
/// RMSE). Inversion is done on the diagonally equilibrated matrix; condition
/// above 1e12 there raises SingularFisher with the offending direction.
struct CrlbReport {
    std::vector<double> var_amplitude; // per target
    std::vector<double> var_phase_rad2;
    std::vector<double> var_tau_s2;
    std::vector<double> var_nu_hz2;
    std::vector<double> var_phi_rad2;
    double floor_tau_s = 0.0;
    double floor_nu_hz = 0.0;
};
CrlbReport crlb_bounds(const FisherMatrix& f, const SearchGrid& grid);

/// CSV export: snr_db,crlb_tau_s2,crlb_nu_hz2,crlb_phi_rad2,floor_tau_s,floor_nu_hz
struct CrlbSweepRow {
    double snr_db = 0.0;
    double crlb_tau_s2 = 0.0;
    double crlb_nu_hz2 = 0.0;
    double crlb_phi_rad2 = 0.0;
    double floor_tau_s = 0.0;
    double floor_nu_hz = 0.0;
};
void write_crlb_csv(const std::vector<CrlbSweepRow>& rows, const std::string& path);

} // namespace otfsradar
