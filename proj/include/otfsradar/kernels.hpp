// SPDX-License-Identifier: Apache-2.0
//
// otfs-radar: delay-Doppler MIMO radar simulation and estimation toolkit.

#pragma once

#include <span>
#include <string_view>

#include "otfsradar/types.hpp"

namespace otfsradar::kernels {

/// Complex-vector kernels backing the arithmetic inner loops (channel
/// application, grid-search objectives, covariance accumulation). Each kernel
/// has a scalar reference implementation and an AVX2/FMA variant; the variant
/// is picked once per process from CPUID, overridable with force() or the
/// OTFS_RADAR_SIMD environment variable ("scalar" / "avx2").
enum class Isa { scalar, avx2 };

Isa best_supported();
Isa active();
void force(Isa isa); // throws Error if `isa` is not supported on this host
std::string_view isa_name(Isa isa);

/// sum_i a_i * b_i
Complex cdotu(std::span<const Complex> a, std::span<const Complex> b);
/// sum_i conj(a_i) * b_i
Complex cdotc(std::span<const Complex> a, std::span<const Complex> b);
/// sum_i |a_i|^2
double cnrm2sq(std::span<const Complex> a);
/// y += alpha * x
void caxpy(Complex alpha, std::span<const Complex> x, std::span<Complex> y);
/// x *= alpha
void cscal(Complex alpha, std::span<Complex> x);
/// y = A x for a dense row-major matrix
void cmatvec(const CMatrix& a, std::span<const Complex> x, std::span<Complex> y);

namespace detail {

struct Vtable {
    Complex (*cdotu)(const Complex*, const Complex*, std::size_t);
    Complex (*cdotc)(const Complex*, const Complex*, std::size_t);
    double (*cnrm2sq)(const Complex*, std::size_t);
    void (*caxpy)(Complex, const Complex*, Complex*, std::size_t);
    void (*cscal)(Complex, Complex*, std::size_t);
};

extern const Vtable scalar_vtable;
#if defined(__x86_64__) || defined(__i386__)
extern const Vtable avx2_vtable;
#endif

} // namespace detail

} // namespace otfsradar::kernels
