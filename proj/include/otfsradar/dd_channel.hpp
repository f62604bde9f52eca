// SPDX-License-Identifier: Apache-2.0
//
// otfs-radar: delay-Doppler MIMO radar simulation and estimation toolkit.

#pragma once

#include <cstdint>
#include <string>

#include "otfsradar/otfs_signal.hpp"
#include "otfsradar/params.hpp"
#include "otfsradar/types.hpp"

namespace otfsradar {

/// ULA steering vector, element n (0-based): e^{j n pi sin(phi)}.
/// Transmit and receive responses coincide for the co-located array.
CVec steering(double phi_rad, int n_antennas); // AngleOutOfRange

/// NM x NM inter-symbol/inter-carrier coupling matrix for one target at
/// (tau, nu), in the Doppler-major block layout: block (k, k') is M x M over
/// (l, l'). At (0, 0) it is the identity.
struct PsiMatrix {
    CMatrix m;
    double tau_s = 0.0;
    double nu_hz = 0.0;
};

/// Single element Psi_{k,k'}[l,l'], evaluated directly from the closed form
/// (complex-quotient Dirichlet factors). This is the slow, auditable path
/// backing the brute-force receive oracle; psi_matrix() uses a factored
/// assembly and is checked against this element-wise.
Complex psi_element(const SystemConfig& cfg, double tau_s, double nu_hz, int k, int l, int kp,
                    int lp);

PsiMatrix psi_matrix(const SystemConfig& cfg, double tau_s, double nu_hz); // DelayOutOfFrame

/// y_psi = Psi(tau, nu) x without materializing the matrix against callers;
/// same factored evaluation as psi_matrix.
CVec psi_apply(const SystemConfig& cfg, double tau_s, double nu_hz,
               std::span<const Complex> x);

/// Per-target channel (b(phi) a^H(phi) f_bf) (x) Psi, dimension (N_a NM) x NM.
/// Antenna q owns the contiguous row block [q NM, (q+1) NM).
CMatrix channel_matrix(const SystemConfig& cfg, double tau_s, double nu_hz, double phi_rad);

/// a^H(phi) f_bf: the scalar transmit beamforming response toward phi.
Complex beamform_response(const SystemConfig& cfg, double phi_rad);

/// Noise variance solving the radar-SNR definition for sigma_w^2:
///   sigma_w^2 = lambda^2 sigma_rcs G^2 P_avg / ((4 pi)^3 r^4 SNR)
double noise_var_from_snr(const SystemConfig& cfg, double range_m, double snr_rad_db);

/// Noise variance paired with the toolkit's unit-magnitude gain convention:
/// the path loss carried by the gain in the radar-SNR definition cancels
/// against the same factor in noise_var_from_snr, leaving
///   sigma_eff^2 = P_avg / SNR.
/// Simulation, CRLB and sweeps all use this so the SNR axis actually moves
/// the operating point.
double effective_noise_var(const SystemConfig& cfg, double snr_rad_db);

/// Received vector, antenna-major layout, plus the noise level it was
/// generated with.
struct RxVector {
    CVec samples; // length N_a * N * M
    double noise_var = 0.0;
};

/// y = sum_p h'_p G_p x + w, with w circularly-symmetric complex Gaussian of
/// variance sigma_w^2 per element. Noise draws are keyed by (seed, element),
/// so results are independent of evaluation order.
RxVector simulate_rx_with_noise_var(const Scenario& s, const DDFrame& frame, double sigma_w2,
                                    std::uint64_t seed);

/// Same, with sigma_w^2 = effective_noise_var(cfg, snr_rad_db).
RxVector simulate_rx(const Scenario& s, const DDFrame& frame, double snr_rad_db,
                     std::uint64_t seed);

/// Brute-force noiseless receive signal: element-wise double sum over the
/// per-target coupling coefficients, bypassing all matrix assembly. Small
/// sizes only (O(N^2 M^2 N_a P)).
RxVector oracle_rx_dd(const Scenario& s, const DDFrame& frame);

// Binary dump: 32-byte header {magic "OTFR", u32 N, u32 M, u32 flags,
// u32 N_a, u32 reserved, f64 noise_var} then the antenna-major payload as
// little-endian interleaved float64.
void save_rx(const RxVector& rx, const SystemConfig& cfg, const std::string& path);
RxVector load_rx(const std::string& path, int* n_doppler = nullptr, int* m_delay = nullptr,
                 int* n_antennas = nullptr);

} // namespace otfsradar
