// SPDX-License-Identifier: Apache-2.0
//
// otfs-radar: delay-Doppler MIMO radar simulation and estimation toolkit.
//
// AVX2/FMA kernels. A __m256d packs two complex<double> as [re0 im0 re1 im1];
// complex products use the movedup/permute + fmaddsub pattern. Compiled with
// -mavx2 -mfma in its own translation unit and reached only through the
// dispatch table after a CPUID check.

#if defined(__x86_64__) || defined(__i386__)

#include <immintrin.h>

#include "otfsradar/kernels.hpp"

namespace otfsradar::kernels::detail {

namespace {

inline __m256d cmul_pd(__m256d a, __m256d b) {
    const __m256d b_re = _mm256_movedup_pd(b);
    const __m256d b_im = _mm256_permute_pd(b, 0xF);
    const __m256d a_sw = _mm256_permute_pd(a, 0x5);
    return _mm256_fmaddsub_pd(a, b_re, _mm256_mul_pd(a_sw, b_im));
}

inline Complex reduce_c(__m256d acc) {
    const __m128d lo = _mm256_castpd256_pd128(acc);
    const __m128d hi = _mm256_extractf128_pd(acc, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    alignas(16) double out[2];
    _mm_store_pd(out, s);
    return {out[0], out[1]};
}

inline const double* dp(const Complex* p) { return reinterpret_cast<const double*>(p); }
inline double* dp(Complex* p) { return reinterpret_cast<double*>(p); }

Complex cdotu_avx2(const Complex* a, const Complex* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const __m256d va = _mm256_loadu_pd(dp(a + i));
        const __m256d vb = _mm256_loadu_pd(dp(b + i));
        acc = _mm256_add_pd(acc, cmul_pd(va, vb));
    }
    Complex s = reduce_c(acc);
    for (; i < n; ++i) {
        const double ar = a[i].real(), ai = a[i].imag();
        const double br = b[i].real(), bi = b[i].imag();
        s += Complex{ar * br - ai * bi, ar * bi + ai * br};
    }
    return s;
}

Complex cdotc_avx2(const Complex* a, const Complex* b, std::size_t n) {
    const __m256d conj_mask = _mm256_set_pd(-0.0, 0.0, -0.0, 0.0);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const __m256d va = _mm256_xor_pd(_mm256_loadu_pd(dp(a + i)), conj_mask);
        const __m256d vb = _mm256_loadu_pd(dp(b + i));
        acc = _mm256_add_pd(acc, cmul_pd(va, vb));
    }
    Complex s = reduce_c(acc);
    for (; i < n; ++i) {
        const double ar = a[i].real(), ai = a[i].imag();
        const double br = b[i].real(), bi = b[i].imag();
        s += Complex{ar * br + ai * bi, ar * bi - ai * br};
    }
    return s;
}

double cnrm2sq_avx2(const Complex* a, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const __m256d va = _mm256_loadu_pd(dp(a + i));
        acc = _mm256_fmadd_pd(va, va, acc);
    }
    const Complex s = reduce_c(acc);
    double out = s.real() + s.imag();
    for (; i < n; ++i) out += a[i].real() * a[i].real() + a[i].imag() * a[i].imag();
    return out;
}

void caxpy_avx2(Complex alpha, const Complex* x, Complex* y, std::size_t n) {
    const __m256d a_re = _mm256_set1_pd(alpha.real());
    const __m256d a_im = _mm256_set1_pd(alpha.imag());
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const __m256d vx = _mm256_loadu_pd(dp(x + i));
        const __m256d x_sw = _mm256_permute_pd(vx, 0x5);
        const __m256d prod = _mm256_fmaddsub_pd(vx, a_re, _mm256_mul_pd(x_sw, a_im));
        _mm256_storeu_pd(dp(y + i), _mm256_add_pd(_mm256_loadu_pd(dp(y + i)), prod));
    }
    const double ar = alpha.real(), ai = alpha.imag();
    for (; i < n; ++i) {
        const double xr = x[i].real(), xi = x[i].imag();
        y[i] += Complex{ar * xr - ai * xi, ar * xi + ai * xr};
    }
}

void cscal_avx2(Complex alpha, Complex* x, std::size_t n) {
    const __m256d a_re = _mm256_set1_pd(alpha.real());
    const __m256d a_im = _mm256_set1_pd(alpha.imag());
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const __m256d vx = _mm256_loadu_pd(dp(x + i));
        const __m256d x_sw = _mm256_permute_pd(vx, 0x5);
        _mm256_storeu_pd(dp(x + i), _mm256_fmaddsub_pd(vx, a_re, _mm256_mul_pd(x_sw, a_im)));
    }
    const double ar = alpha.real(), ai = alpha.imag();
    for (; i < n; ++i) {
        const double xr = x[i].real(), xi = x[i].imag();
        x[i] = Complex{ar * xr - ai * xi, ar * xi + ai * xr};
    }
}

} // namespace

const Vtable avx2_vtable = {cdotu_avx2, cdotc_avx2, cnrm2sq_avx2, caxpy_avx2, cscal_avx2};

} // namespace otfsradar::kernels::detail

#endif // x86
