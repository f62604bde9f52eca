// SPDX-License-Identifier: Apache-2.0
//
// otfs-radar: delay-Doppler MIMO radar simulation and estimation toolkit.

#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

#include "otfsradar/types.hpp"

namespace otfsradar {

/// Counter-based deterministic generator. Every draw is a pure function of
/// (key, counter), so noise and data streams are independent of evaluation
/// order and thread scheduling. Built on the splitmix64 finalizer.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t key) : key_(key) {}

    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Hash-chains a list of integers into a stream key.
    static std::uint64_t derive(std::initializer_list<std::uint64_t> parts) {
        std::uint64_t k = 0x853c49e6748fea9bULL;
        for (std::uint64_t p : parts) k = mix(k ^ mix(p));
        return k;
    }

    std::uint64_t key() const { return key_; }

    std::uint64_t bits(std::uint64_t counter) const { return mix(key_ ^ mix(counter)); }

    /// Uniform in [0, 1).
    double uniform01(std::uint64_t counter) const {
        return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
    }

    /// Uniform in (0, 1]; safe as a log() argument.
    double uniform_pos(std::uint64_t counter) const {
        return static_cast<double>((bits(counter) >> 11) + 1) * 0x1.0p-53;
    }

    /// Standard circularly-symmetric complex Gaussian, E|z|^2 = 1.
    /// Consumes counters 2*draw and 2*draw+1.
    Complex std_complex_gaussian(std::uint64_t draw) const {
        const double u1 = uniform_pos(2 * draw);
        const double u2 = uniform01(2 * draw + 1);
        const double r = std::sqrt(-std::log(u1));
        const double th = 2.0 * std::numbers::pi * u2;
        return {r * std::cos(th), r * std::sin(th)};
    }

private:
    std::uint64_t key_;
};

// Stream tags keeping independent random streams from colliding.
namespace rng_stream {
inline constexpr std::uint64_t frame = 0x66726d65; // "frme"
inline constexpr std::uint64_t noise = 0x6e6f6973; // "nois"
inline constexpr std::uint64_t gain = 0x6761696e;  // "gain"
} // namespace rng_stream

} // namespace otfsradar
