// SPDX-License-Identifier: Apache-2.0
//
// otfs-radar: delay-Doppler MIMO radar simulation and estimation toolkit.

#pragma once

#include <cstdint>
#include <string>

#include "otfsradar/params.hpp"
#include "otfsradar/types.hpp"

namespace otfsradar {

/// Delay-Doppler frame: N x M symbols x_{k,l}, row k = Doppler bin,
/// column l = delay bin. qam_order == 0 marks a frame holding arbitrary
/// (non-constellation) data, e.g. the output of sfft().
struct DDFrame {
    CMatrix symbols;
    int qam_order = 0;
};

/// Time-frequency grid: N x M samples X[n,m], row n = time slot,
/// column m = subcarrier.
struct TFGrid {
    CMatrix samples;
};

/// N*M i.i.d. uniform QAM symbols scaled so the mean symbol energy equals
/// P_avg / N_a. Deterministic per seed. qam_order in {4, 16, 64}.
DDFrame gen_dd_frame(const SystemConfig& cfg, int qam_order, std::uint64_t seed);

/// ISFFT, unnormalized forward transform:
///   X[n,m] = sum_k sum_l x_{k,l} e^{j 2 pi (nk/N - ml/M)}
TFGrid isfft(const DDFrame& f);

/// SFFT, inverse of isfft, carries the 1/(NM) factor:
///   y[k,l] = (1/NM) sum_n sum_m Y[n,m] e^{j 2 pi (ml/M - nk/N)}
DDFrame sfft(const TFGrid& g);

/// Doppler-major stacking: element k*M + l of the vector is x_{k,l}.
/// This ordering matches the block layout of the inter-symbol coupling
/// matrix and is asserted by tests; do not change it.
CVec vectorize(const DDFrame& f);
CVec vectorize(const CMatrix& m);
CMatrix devectorize(const CVec& v, int n_doppler, int m_delay); // LengthMismatch

// Binary dump: 16-byte header {magic "OTFS", u32 N, u32 M, u32 flags} then
// row-major little-endian interleaved float64 (re, im). flags bit 0 marks a
// time-frequency grid.
void save_dd_frame(const DDFrame& f, const std::string& path);
DDFrame load_dd_frame(const std::string& path);
void save_tf_grid(const TFGrid& g, const std::string& path);
TFGrid load_tf_grid(const std::string& path);

} // namespace otfsradar
