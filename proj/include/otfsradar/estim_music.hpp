// SPDX-License-Identifier: Apache-2.0
//
// otfs-radar: delay-Doppler MIMO radar simulation and estimation toolkit.

#pragma once

#include <span>
#include <string>
#include <vector>

#include "otfsradar/types.hpp"

namespace otfsradar {

/// Reshape the antenna-major received vector into the N_a x NM snapshot
/// matrix: row q holds antenna q's NM delay-Doppler samples.
CMatrix unstack(std::span<const Complex> y, int n_antennas); // LengthMismatch
CVec restack(const CMatrix& u);

/// Unnormalized spatial covariance R = U U^H (N_a x N_a).
CMatrix covariance(const CMatrix& u);

/// Orthogonal projector onto the noise subspace, C = V_N V_N^H, built from
/// the trailing N_a - p eigenvectors of the Hermitian covariance (eigenvalues
/// sorted descending).
struct NoiseProjector {
    CMatrix c;
    int p_sources = 0;
};
NoiseProjector noise_projector(const CMatrix& r, int p_sources);
// errors: EigenFailure; SubspaceDegenerate when the signal/noise eigenvalue
// split is ambiguous (lambda_p == lambda_{p+1} within 1e-12 relative)

/// Pseudo-spectrum P(phi) = 1 / |a(phi)^H C a(phi)| on the given grid, plus
/// the top-p peak angles (local maxima sorted by height).
struct MusicSpectrum {
    std::vector<double> angles_rad;
    std::vector<double> values;
    std::vector<double> peak_angles_rad;
};
MusicSpectrum spectral_music(const CMatrix& c_proj, std::span<const double> angle_grid_rad,
                             int top_p);

/// Gridless AoA estimation: roots of the MUSIC polynomial
/// D(z) = sum_i c_i z^i, c_i = i-th subdiagonal sum of C, z = e^{-j pi sin phi};
/// the p roots inside the unit disk closest to |z| = 1 map to angles via
/// phi = -asin(arg(z)/pi). Returned sorted ascending.
std::vector<double> root_music(const NoiseProjector& proj, int p);
// errors: RootFindingFailure, InsufficientRoots

/// Eigenvalue largest-ratio-gap heuristic for the source count. Provided for
/// exploration; the estimators take the true count as input.
int estimate_source_count(const CMatrix& r);

/// CSV export with columns angle_deg,pseudo_spectrum.
void write_spectrum_csv(const MusicSpectrum& s, const std::string& path);

} // namespace otfsradar
