// SPDX-License-Identifier: Apache-2.0
//
// otfs-radar: delay-Doppler MIMO radar simulation and estimation toolkit.

#include "otfsradar/kernels.hpp"

#include <atomic>
#include <cassert>
#include <cstdlib>
#include <cstring>
#include <mutex>

namespace otfsradar::kernels {

namespace {

bool host_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const detail::Vtable* vtable_for(Isa isa) {
#if defined(__x86_64__) || defined(__i386__)
    if (isa == Isa::avx2) return &detail::avx2_vtable;
#endif
    (void)isa;
    return &detail::scalar_vtable;
}

std::atomic<const detail::Vtable*> g_vtable{nullptr};
std::atomic<Isa> g_isa{Isa::scalar};
std::once_flag g_init_flag;

void init_dispatch() {
    Isa pick = best_supported();
    if (const char* env = std::getenv("OTFS_RADAR_SIMD")) {
        if (std::strcmp(env, "scalar") == 0) pick = Isa::scalar;
        else if (std::strcmp(env, "avx2") == 0 && host_has_avx2()) pick = Isa::avx2;
    }
    g_isa.store(pick);
    g_vtable.store(vtable_for(pick));
}

inline const detail::Vtable& vt() {
    const detail::Vtable* t = g_vtable.load(std::memory_order_acquire);
    if (!t) {
        std::call_once(g_init_flag, init_dispatch);
        t = g_vtable.load(std::memory_order_acquire);
    }
    return *t;
}

} // namespace

Isa best_supported() { return host_has_avx2() ? Isa::avx2 : Isa::scalar; }

Isa active() {
    vt();
    return g_isa.load();
}

void force(Isa isa) {
    if (isa == Isa::avx2 && !host_has_avx2())
        throw Error("kernels: AVX2 requested but not supported on this host");
    std::call_once(g_init_flag, init_dispatch);
    g_isa.store(isa);
    g_vtable.store(vtable_for(isa), std::memory_order_release);
}

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

Complex cdotu(std::span<const Complex> a, std::span<const Complex> b) {
    assert(a.size() == b.size());
    return vt().cdotu(a.data(), b.data(), a.size());
}

Complex cdotc(std::span<const Complex> a, std::span<const Complex> b) {
    assert(a.size() == b.size());
    return vt().cdotc(a.data(), b.data(), a.size());
}

double cnrm2sq(std::span<const Complex> a) { return vt().cnrm2sq(a.data(), a.size()); }

void caxpy(Complex alpha, std::span<const Complex> x, std::span<Complex> y) {
    assert(x.size() == y.size());
    vt().caxpy(alpha, x.data(), y.data(), x.size());
}

void cscal(Complex alpha, std::span<Complex> x) { vt().cscal(alpha, x.data(), x.size()); }

void cmatvec(const CMatrix& a, std::span<const Complex> x, std::span<Complex> y) {
    assert(x.size() == a.cols() && y.size() == a.rows());
    const auto& t = vt();
    for (std::size_t r = 0; r < a.rows(); ++r)
        y[r] = t.cdotu(a.data() + r * a.cols(), x.data(), a.cols());
}

} // namespace otfsradar::kernels
