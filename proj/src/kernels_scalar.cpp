// SPDX-License-Identifier: Apache-2.0
//
// otfs-radar: delay-Doppler MIMO radar simulation and estimation toolkit.
//
// Reference kernels. These define the semantics the SIMD variants are
// equivalence-tested against.

#include "otfsradar/kernels.hpp"

namespace otfsradar::kernels::detail {

namespace {

Complex cdotu_scalar(const Complex* a, const Complex* b, std::size_t n) {
    double re = 0.0, im = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ar = a[i].real(), ai = a[i].imag();
        const double br = b[i].real(), bi = b[i].imag();
        re += ar * br - ai * bi;
        im += ar * bi + ai * br;
    }
    return {re, im};
}

Complex cdotc_scalar(const Complex* a, const Complex* b, std::size_t n) {
    double re = 0.0, im = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ar = a[i].real(), ai = a[i].imag();
        const double br = b[i].real(), bi = b[i].imag();
        re += ar * br + ai * bi;
        im += ar * bi - ai * br;
    }
    return {re, im};
}

double cnrm2sq_scalar(const Complex* a, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        acc += a[i].real() * a[i].real() + a[i].imag() * a[i].imag();
    return acc;
}

void caxpy_scalar(Complex alpha, const Complex* x, Complex* y, std::size_t n) {
    const double ar = alpha.real(), ai = alpha.imag();
    for (std::size_t i = 0; i < n; ++i) {
        const double xr = x[i].real(), xi = x[i].imag();
        y[i] += Complex{ar * xr - ai * xi, ar * xi + ai * xr};
    }
}

void cscal_scalar(Complex alpha, Complex* x, std::size_t n) {
    const double ar = alpha.real(), ai = alpha.imag();
    for (std::size_t i = 0; i < n; ++i) {
        const double xr = x[i].real(), xi = x[i].imag();
        x[i] = Complex{ar * xr - ai * xi, ar * xi + ai * xr};
    }
}

} // namespace

const Vtable scalar_vtable = {cdotu_scalar, cdotc_scalar, cnrm2sq_scalar, caxpy_scalar,
                              cscal_scalar};

} // namespace otfsradar::kernels::detail
