// SPDX-License-Identifier: Apache-2.0
//
// Subspace AoA estimation: covariance, projector laws and MUSIC in both
// spectral and rooting form.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "otfsradar/dd_channel.hpp"
#include "otfsradar/estim_music.hpp"
#include "otfsradar/kernels.hpp"
#include "otfsradar/otfs_signal.hpp"
#include "otfsradar/rng.hpp"

using namespace otfsradar;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double deg = kPi / 180.0;

SystemConfig cfg_na(int na, int n = 4, int m = 4) { return SystemConfig::make(n, m, 1e6, na, 24e9); }

Scenario targets_at(const SystemConfig& cfg, std::initializer_list<double> phis_rad) {
    Scenario s;
    s.config = cfg;
    int i = 0;
    for (double phi : phis_rad) {
        const double tau = (0.25 + 0.1 * i) * 3.0 / (4.0 * cfg.delta_f_hz);
        const double nu = (0.35 + 0.2 * i) / (4.0 * cfg.symbol_duration_s);
        TargetTruth t;
        t.range_m = tau * kSpeedOfLight / 2.0;
        t.velocity_mps = nu * kSpeedOfLight / (2.0 * cfg.carrier_hz);
        t.aoa_rad = phi;
        t.gain = std::polar(1.0, 0.4 + 0.9 * i);
        t.delay_s = tau;
        t.doppler_hz = nu;
        t.rotated_gain = t.gain * std::polar(1.0, 2.0 * kPi * nu * tau);
        s.targets.push_back(t);
        ++i;
    }
    return s;
}

CVec noiseless_rx(const Scenario& s, std::uint64_t seed = 3) {
    const DDFrame f = gen_dd_frame(s.config, 4, seed);
    return simulate_rx_with_noise_var(s, f, 0.0, 0).samples;
}

std::vector<double> degree_grid(double step_deg) {
    std::vector<double> g;
    for (double a = -90.0; a <= 90.0 + 1e-9; a += step_deg) g.push_back(a * deg);
    return g;
}

} // namespace

TEST_CASE("unstack reshapes antenna-major and round trips") {
    CVec y(6);
    for (int i = 0; i < 6; ++i) y[static_cast<std::size_t>(i)] = Complex(i, -i);
    const CMatrix u = unstack(y, 2);
    CHECK(u.rows() == 2);
    CHECK(u.cols() == 3);
    CHECK(u(1, 1) == y[4]);
    CHECK(restack(u) == y);
    CHECK_THROWS_AS(unstack(y, 4), LengthMismatch);
}

TEST_CASE("noiseless single target: snapshot rows are scalar multiples of row 0") {
    const SystemConfig cfg = cfg_na(4);
    const Scenario s = targets_at(cfg, {25.0 * deg});
    const CMatrix u = unstack(noiseless_rx(s), 4);
    for (std::size_t q = 1; q < 4; ++q) {
        const Complex ratio = u(q, 0) / u(0, 0);
        for (std::size_t c = 1; c < u.cols(); ++c)
            CHECK(std::abs(u(q, c) / u(0, c) - ratio) < 1e-9);
    }
}

TEST_CASE("covariance is Hermitian PSD; orthonormal rows give identity") {
    const SystemConfig cfg = cfg_na(3);
    const Scenario s = targets_at(cfg, {-40.0 * deg});
    CMatrix u = unstack(noiseless_rx(s), 3);
    CounterRng rng(CounterRng::derive({99}));
    for (std::size_t i = 0; i < u.size(); ++i)
        u.data()[i] += 0.05 * rng.std_complex_gaussian(i);
    const CMatrix r = covariance(u);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(r(i, i).real() >= -1e-12);
        for (std::size_t j = 0; j < 3; ++j)
            CHECK(std::abs(r(i, j) - std::conj(r(j, i))) < 1e-12);
    }

    CMatrix e(2, 4);
    e(0, 0) = 1.0;
    e(1, 1) = 1.0;
    const CMatrix re = covariance(e);
    CHECK(std::abs(re(0, 0) - 1.0) < 1e-15);
    CHECK(std::abs(re(1, 1) - 1.0) < 1e-15);
    CHECK(std::abs(re(0, 1)) < 1e-15);
}

TEST_CASE("noiseless single target covariance is rank one") {
    const SystemConfig cfg = cfg_na(5);
    const Scenario s = targets_at(cfg, {10.0 * deg});
    const CMatrix r = covariance(unstack(noiseless_rx(s), 5));
    // rank one <=> ||R||_F^2 == tr(R)^2 for a PSD matrix
    double tr = 0.0, fro2 = 0.0;
    for (std::size_t i = 0; i < 5; ++i) tr += r(i, i).real();
    for (std::size_t i = 0; i < r.size(); ++i) fro2 += std::norm(r.data()[i]);
    CHECK(fro2 == doctest::Approx(tr * tr).epsilon(1e-9));
}

TEST_CASE("noise projector axioms and signal orthogonality") {
    const SystemConfig cfg = cfg_na(6);
    const double phi = -17.0 * deg;
    const Scenario s = targets_at(cfg, {phi});
    const CMatrix r = covariance(unstack(noiseless_rx(s), 6));
    const NoiseProjector proj = noise_projector(r, 1);

    double tr = 0.0;
    for (std::size_t i = 0; i < 6; ++i) tr += proj.c(i, i).real();
    CHECK(tr == doctest::Approx(5.0).epsilon(1e-9)); // trace = N_a - p
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 6; ++j) {
            CHECK(std::abs(proj.c(i, j) - std::conj(proj.c(j, i))) < 1e-9);
            Complex cc = 0.0;
            for (std::size_t k = 0; k < 6; ++k) cc += proj.c(i, k) * proj.c(k, j);
            CHECK(std::abs(cc - proj.c(i, j)) < 1e-9); // C^2 = C
        }

    const CVec b = steering(phi, 6);
    CVec cb(6);
    kernels::cmatvec(proj.c, b, cb);
    CHECK(std::sqrt(kernels::cnrm2sq(cb)) < 1e-9 * std::sqrt(kernels::cnrm2sq(b)));
}

TEST_CASE("degenerate eigenvalue split is reported") {
    CMatrix r(3, 3); // zero covariance: all eigenvalues equal
    CHECK_THROWS_AS(noise_projector(r, 1), SubspaceDegenerate);
}

TEST_CASE("spectral MUSIC finds a single noiseless target to the grid step") {
    const SystemConfig cfg = cfg_na(8);
    const Scenario s = targets_at(cfg, {20.0 * deg});
    const NoiseProjector proj = noise_projector(covariance(unstack(noiseless_rx(s), 8)), 1);
    const MusicSpectrum spec = spectral_music(proj.c, degree_grid(0.01), 1);
    REQUIRE(spec.peak_angles_rad.size() == 1);
    CHECK(std::abs(spec.peak_angles_rad[0] - 20.0 * deg) <= 0.01 * deg + 1e-12);
}

TEST_CASE("spectral MUSIC separates two noiseless targets at +-30 degrees") {
    const SystemConfig cfg = cfg_na(8);
    const Scenario s = targets_at(cfg, {-30.0 * deg, 30.0 * deg});
    const NoiseProjector proj = noise_projector(covariance(unstack(noiseless_rx(s), 8)), 2);
    const MusicSpectrum spec = spectral_music(proj.c, degree_grid(0.05), 2);
    REQUIRE(spec.peak_angles_rad.size() == 2);
    const double lo = std::min(spec.peak_angles_rad[0], spec.peak_angles_rad[1]);
    const double hi = std::max(spec.peak_angles_rad[0], spec.peak_angles_rad[1]);
    CHECK(std::abs(lo + 30.0 * deg) <= 0.05 * deg + 1e-12);
    CHECK(std::abs(hi - 30.0 * deg) <= 0.05 * deg + 1e-12);
}

TEST_CASE("spectrum is a fixed point of the projector: C and C*C agree") {
    const SystemConfig cfg = cfg_na(5);
    const Scenario s = targets_at(cfg, {5.0 * deg});
    const NoiseProjector proj = noise_projector(covariance(unstack(noiseless_rx(s), 5)), 1);
    CMatrix c2(5, 5);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j) {
            Complex acc = 0.0;
            for (std::size_t k = 0; k < 5; ++k) acc += proj.c(i, k) * proj.c(k, j);
            c2(i, j) = acc;
        }
    const auto grid = degree_grid(1.0);
    const MusicSpectrum a = spectral_music(proj.c, grid, 1);
    const MusicSpectrum b = spectral_music(c2, grid, 1);
    CHECK(a.peak_angles_rad[0] == b.peak_angles_rad[0]);
    // at angles where a^H C a underflows toward zero the reciprocal is
    // meaningless noise, so compare only well-conditioned samples
    for (std::size_t i = 0; i < a.values.size(); ++i)
        if (a.values[i] < 1e12 && b.values[i] < 1e12)
            CHECK(a.values[i] == doctest::Approx(b.values[i]).epsilon(1e-6));
}

TEST_CASE("MUSIC quadratic form is real and nonnegative on a 1-degree sweep") {
    const SystemConfig cfg = cfg_na(7);
    const Scenario s = targets_at(cfg, {33.0 * deg});
    const NoiseProjector proj = noise_projector(covariance(unstack(noiseless_rx(s), 7)), 1);
    for (double a = -90.0; a <= 90.0; a += 1.0) {
        const CVec v = steering(a * deg, 7);
        CVec cv(7);
        kernels::cmatvec(proj.c, v, cv);
        const Complex q = kernels::cdotc(v, cv);
        CHECK(std::abs(q.imag()) < 1e-9);
        CHECK(q.real() >= -1e-9);
    }
}

TEST_CASE("root MUSIC matches spectral MUSIC on a fine local grid") {
    const SystemConfig cfg = cfg_na(8);
    const Scenario s = targets_at(cfg, {20.0 * deg});
    const NoiseProjector proj = noise_projector(covariance(unstack(noiseless_rx(s), 8)), 1);
    const std::vector<double> roots = root_music(proj, 1);
    REQUIRE(roots.size() == 1);
    CHECK(std::abs(roots[0] - 20.0 * deg) < 1e-4 * deg);

    std::vector<double> local;
    for (double a = 19.99; a <= 20.01; a += 1e-5) local.push_back(a * deg);
    const MusicSpectrum spec = spectral_music(proj.c, local, 1);
    CHECK(std::abs(roots[0] - spec.peak_angles_rad[0]) <= 2e-5 * deg);
}

TEST_CASE("root MUSIC across a span of angles, noiseless") {
    const SystemConfig cfg = cfg_na(8);
    for (double a : {-60.0, -30.0, 0.0, 30.0, 60.0}) {
        const Scenario s = targets_at(cfg, {a * deg});
        const NoiseProjector proj = noise_projector(covariance(unstack(noiseless_rx(s), 8)), 1);
        const std::vector<double> roots = root_music(proj, 1);
        REQUIRE(roots.size() == 1);
        CHECK(std::abs(roots[0] - a * deg) < 1e-5 * deg);
    }
}

TEST_CASE("broadside target gives the root at z = 1") {
    const SystemConfig cfg = cfg_na(6);
    const Scenario s = targets_at(cfg, {0.0});
    const NoiseProjector proj = noise_projector(covariance(unstack(noiseless_rx(s), 6)), 1);
    const std::vector<double> roots = root_music(proj, 1);
    CHECK(std::abs(roots[0]) < 1e-6 * deg);
}

TEST_CASE("MUSIC polynomial roots pair as (z, 1/conj(z))") {
    const SystemConfig cfg = cfg_na(5);
    const Scenario s = targets_at(cfg, {12.0 * deg});
    CMatrix u = unstack(noiseless_rx(s), 5);
    CounterRng rng(CounterRng::derive({17}));
    for (std::size_t i = 0; i < u.size(); ++i)
        u.data()[i] += 0.1 * rng.std_complex_gaussian(i);
    const NoiseProjector proj = noise_projector(covariance(u), 1);

    // rebuild the polynomial exactly as root_music does and root it with a
    // Durand-Kerner iteration, independent of the companion-matrix path
    const int na = 5, deg_p = 2 * na - 2;
    CVec coef(static_cast<std::size_t>(deg_p + 1));
    for (int i = 0; i < na; ++i) {
        Complex ci = 0.0;
        for (int row = i; row < na; ++row)
            ci += proj.c(static_cast<std::size_t>(row), static_cast<std::size_t>(row - i));
        coef[static_cast<std::size_t>((na - 1) + i)] = ci;
        coef[static_cast<std::size_t>((na - 1) - i)] = std::conj(ci);
    }
    std::vector<Complex> z(static_cast<std::size_t>(deg_p));
    for (int i = 0; i < deg_p; ++i)
        z[static_cast<std::size_t>(i)] = std::polar(0.9, 2.0 * kPi * (i + 0.37) / deg_p);
    for (int it = 0; it < 400; ++it)
        for (int i = 0; i < deg_p; ++i) {
            Complex num = 0.0;
            for (int d = deg_p; d >= 0; --d)
                num = num * z[static_cast<std::size_t>(i)] + coef[static_cast<std::size_t>(d)];
            num /= coef[static_cast<std::size_t>(deg_p)];
            Complex den = 1.0;
            for (int j = 0; j < deg_p; ++j)
                if (j != i) den *= z[static_cast<std::size_t>(i)] - z[static_cast<std::size_t>(j)];
            z[static_cast<std::size_t>(i)] -= num / den;
        }
    for (const Complex& zi : z) {
        const Complex partner = 1.0 / std::conj(zi);
        double best = 1e9;
        for (const Complex& zj : z) best = std::min(best, std::abs(zj - partner));
        CHECK(best < 1e-6);
    }
}

TEST_CASE("scale invariance: R and 5R give the same estimates") {
    const SystemConfig cfg = cfg_na(6);
    const Scenario s = targets_at(cfg, {-24.0 * deg});
    CMatrix u = unstack(noiseless_rx(s), 6);
    CounterRng rng(CounterRng::derive({31}));
    for (std::size_t i = 0; i < u.size(); ++i)
        u.data()[i] += 0.2 * rng.std_complex_gaussian(i);
    const CMatrix r = covariance(u);
    CMatrix r5 = r;
    for (std::size_t i = 0; i < r5.size(); ++i) r5.data()[i] *= 5.0;

    const NoiseProjector p1 = noise_projector(r, 1);
    const NoiseProjector p2 = noise_projector(r5, 1);
    const double a1 = root_music(p1, 1)[0];
    const double a2 = root_music(p2, 1)[0];
    CHECK(a1 == doctest::Approx(a2).epsilon(1e-12));

    const auto grid = degree_grid(0.5);
    CHECK(spectral_music(p1.c, grid, 1).peak_angles_rad[0] ==
          spectral_music(p2.c, grid, 1).peak_angles_rad[0]);
}

TEST_CASE("vanishing leading coefficient is reported") {
    NoiseProjector proj;
    proj.p_sources = 1;
    proj.c = CMatrix(4, 4);
    for (std::size_t i = 0; i < 4; ++i) proj.c(i, i) = 1.0; // diagonal: corner sums vanish
    CHECK_THROWS_AS(root_music(proj, 1), RootFindingFailure);
}

TEST_CASE("source-count heuristic finds two noiseless targets") {
    const SystemConfig cfg = cfg_na(8);
    const Scenario s = targets_at(cfg, {-35.0 * deg, 18.0 * deg});
    CMatrix u = unstack(noiseless_rx(s), 8);
    CounterRng rng(CounterRng::derive({5150}));
    for (std::size_t i = 0; i < u.size(); ++i)
        u.data()[i] += 1e-4 * rng.std_complex_gaussian(i);
    CHECK(estimate_source_count(covariance(u)) == 2);
}

TEST_CASE("spectrum CSV export has the documented schema") {
    const SystemConfig cfg = cfg_na(4);
    const Scenario s = targets_at(cfg, {8.0 * deg});
    const NoiseProjector proj = noise_projector(covariance(unstack(noiseless_rx(s), 4)), 1);
    const MusicSpectrum spec = spectral_music(proj.c, degree_grid(10.0), 1);
    const std::string path = "spectrum_test.csv";
    write_spectrum_csv(spec, path);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "angle_deg,pseudo_spectrum");
    std::string line;
    std::size_t rows = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == spec.angles_rad.size());
    std::remove(path.c_str());
}
