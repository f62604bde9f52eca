// SPDX-License-Identifier: Apache-2.0
//
// Fisher information assembly and the Cramer-Rao bounds.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include <Eigen/Dense>

#include "otfsradar/crlb.hpp"
#include "otfsradar/dd_channel.hpp"
#include "otfsradar/kernels.hpp"
#include "otfsradar/otfs_signal.hpp"

using namespace otfsradar;

namespace {

constexpr double kPi = std::numbers::pi;

SystemConfig desk_cfg() { return SystemConfig::make(4, 4, 1e6, 4, 24e9); }

TargetParams desk_target(const SystemConfig& cfg) {
    TargetParams tp;
    tp.amplitude = 1.0;
    tp.phase = 0.7;
    tp.tau_s = 1.4 / (cfg.m_delay * cfg.delta_f_hz);
    tp.nu_hz = 0.8 / (cfg.n_doppler * cfg.symbol_duration_s);
    tp.phi_rad = 0.3;
    return tp;
}

} // namespace

TEST_CASE("signal model is linear in amplitude and flips sign with phase + pi") {
    const SystemConfig cfg = desk_cfg();
    const DDFrame f = gen_dd_frame(cfg, 4, 4);
    TargetParams tp = desk_target(cfg);

    tp.amplitude = 0.0;
    for (const Complex& v : signal_model_s(tp, cfg, f)) CHECK(v == Complex{0.0, 0.0});

    tp.amplitude = 0.8;
    const CVec s1 = signal_model_s(tp, cfg, f);
    tp.phase += kPi;
    const CVec s2 = signal_model_s(tp, cfg, f);
    for (std::size_t i = 0; i < s1.size(); ++i) CHECK(std::abs(s2[i] + s1[i]) < 1e-12);
}

TEST_CASE("signal model collapses to scaled per-antenna frame copies at (0,0,0)") {
    const SystemConfig cfg = desk_cfg();
    const DDFrame f = gen_dd_frame(cfg, 4, 5);
    const CVec x = vectorize(f);
    TargetParams tp;
    tp.amplitude = 0.9;
    tp.phase = -1.2;
    const CVec s = signal_model_s(tp, cfg, f);
    // phi = 0: b ident, a^H f_bf = sqrt(N_a); Psi = I
    const Complex scale = std::polar(0.9, -1.2) * std::sqrt(4.0);
    for (int q = 0; q < 4; ++q)
        for (std::size_t i = 0; i < x.size(); ++i)
            CHECK(std::abs(s[static_cast<std::size_t>(q) * x.size() + i] - scale * x[i]) < 1e-12);
}

TEST_CASE("Fisher matrix is symmetric and positive semidefinite") {
    const SystemConfig cfg = desk_cfg();
    const DDFrame f = gen_dd_frame(cfg, 4, 6);
    const FisherMatrix fim = fisher({desk_target(cfg)}, cfg, f, 0.01);
    REQUIRE(fim.dim == 5);
    Eigen::MatrixXd m(5, 5);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = fim.at(i, j);
            CHECK(fim.at(i, j) == fim.at(j, i));
        }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    CHECK(es.eigenvalues()(0) >= -1e-9 * m.trace());
}

TEST_CASE("doubling N0 halves every Fisher entry") {
    const SystemConfig cfg = desk_cfg();
    const DDFrame f = gen_dd_frame(cfg, 4, 7);
    const FisherMatrix a = fisher({desk_target(cfg)}, cfg, f, 0.02);
    const FisherMatrix b = fisher({desk_target(cfg)}, cfg, f, 0.04);
    for (std::size_t i = 0; i < a.data.size(); ++i)
        if (a.data[i] != 0.0) CHECK(b.data[i] == doctest::Approx(a.data[i] / 2.0).epsilon(1e-12));
}

TEST_CASE("amplitude/phase block is exactly diagonal") {
    const SystemConfig cfg = desk_cfg();
    const DDFrame f = gen_dd_frame(cfg, 4, 8);
    const FisherMatrix fim = fisher({desk_target(cfg)}, cfg, f, 0.01);
    // I_{A psi} = (2/N0) Re{sum s_unit^* (j A s_unit)} = 0 identically
    CHECK(fim.at(0, 1) == 0.0);
}

TEST_CASE("finite-difference steps converge at second order") {
    const SystemConfig cfg = desk_cfg();
    const DDFrame f = gen_dd_frame(cfg, 4, 9);
    const CVec x = vectorize(f);
    const TargetParams tp = desk_target(cfg);

    // central differences of s wrt tau at steps h and h/2: Richardson ratio
    // of errors against h/4 reference behaves like 4
    const double h = (1.0 / (cfg.m_delay * cfg.delta_f_hz)) * 1e-4;
    const auto diff_at = [&](double step) {
        TargetParams hi = tp, lo = tp;
        hi.tau_s += step;
        lo.tau_s -= step;
        const CVec shi = signal_model_s(hi, cfg, f);
        const CVec slo = signal_model_s(lo, cfg, f);
        CVec d(shi.size());
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = (shi[i] - slo[i]) / (2.0 * step);
        return d;
    };
    const CVec d1 = diff_at(h), d2 = diff_at(h / 2.0), dref = diff_at(h / 8.0);
    double e1 = 0.0, e2 = 0.0;
    for (std::size_t i = 0; i < d1.size(); ++i) {
        e1 += std::norm(d1[i] - dref[i]);
        e2 += std::norm(d2[i] - dref[i]);
    }
    const double ratio = std::sqrt(e1 / e2);
    CHECK(ratio > 4.0 * 0.8);
    CHECK(ratio < 4.0 * 1.3);

    // and I_tautau moves by < 0.1% when the step halves
    const FisherMatrix fa = fisher({tp}, cfg, f, 0.01);
    // recompute I_tautau with half the step by hand
    const CVec dh = diff_at(h / 2.0);
    double itt = 0.0;
    for (const Complex& v : dh) itt += std::norm(v);
    itt *= 2.0 / 0.01;
    CHECK(std::abs(fa.at(2, 2) - itt) / itt < 1e-3);
}

TEST_CASE("CRLB variances are nonnegative and the floor is linear in the step") {
    const SystemConfig cfg = desk_cfg();
    const DDFrame f = gen_dd_frame(cfg, 4, 10);
    const FisherMatrix fim = fisher({desk_target(cfg)}, cfg, f, 0.01);

    SearchGrid grid = SearchGrid::for_config(cfg);
    grid.levels = 1;
    const CrlbReport rep = crlb_bounds(fim, grid);
    CHECK(rep.var_amplitude[0] >= 0.0);
    CHECK(rep.var_phase_rad2[0] >= 0.0);
    CHECK(rep.var_tau_s2[0] >= 0.0);
    CHECK(rep.var_nu_hz2[0] >= 0.0);
    CHECK(rep.var_phi_rad2[0] >= 0.0);

    SearchGrid coarse = grid;
    coarse.points_per_axis = 6; // doubles the final step (10 intervals -> 5)
    const CrlbReport rep2 = crlb_bounds(fim, coarse);
    CHECK(rep2.floor_tau_s == doctest::Approx(2.0 * rep.floor_tau_s).epsilon(1e-12));
    CHECK(rep2.floor_nu_hz == doctest::Approx(2.0 * rep.floor_nu_hz).epsilon(1e-12));
}

TEST_CASE("CRLB variance scales as 1/SNR: slope -1 on a log-log sweep") {
    const SystemConfig cfg = desk_cfg();
    const DDFrame f = gen_dd_frame(cfg, 4, 11);
    const TargetParams tp = desk_target(cfg);
    const SearchGrid grid = SearchGrid::for_config(cfg);

    std::vector<double> log_snr, log_crlb;
    for (double snr_db : {-10.0, -5.0, 0.0, 5.0, 10.0}) {
        const double n0 = effective_noise_var(cfg, snr_db);
        const CrlbReport rep = crlb_bounds(fisher({tp}, cfg, f, n0), grid);
        log_snr.push_back(snr_db / 10.0); // log10 of linear SNR
        log_crlb.push_back(std::log10(rep.var_tau_s2[0]));
    }
    // least-squares slope
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(log_snr.size());
    for (std::size_t i = 0; i < log_snr.size(); ++i) {
        sx += log_snr[i];
        sy += log_crlb[i];
        sxx += log_snr[i] * log_snr[i];
        sxy += log_snr[i] * log_crlb[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    CHECK(slope == doctest::Approx(-1.0).epsilon(0.05));
}

TEST_CASE("a Fisher matrix with an uninformative direction is rejected") {
    FisherMatrix f;
    f.dim = 5;
    f.n0 = 1.0;
    f.data.assign(25, 0.0);
    for (std::size_t i = 0; i < 4; ++i) f.data[i * 5 + i] = 1.0; // last diagonal zero
    const SearchGrid grid = SearchGrid::for_config(desk_cfg());
    CHECK_THROWS_AS(crlb_bounds(f, grid), SingularFisher);
}

TEST_CASE("crlb CSV export schema") {
    std::vector<CrlbSweepRow> rows(2);
    rows[0].snr_db = 0.0;
    rows[1].snr_db = 5.0;
    const std::string path = "crlb_test.csv";
    write_crlb_csv(rows, path);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "snr_db,crlb_tau_s2,crlb_nu_hz2,crlb_phi_rad2,floor_tau_s,floor_nu_hz");
    std::remove(path.c_str());
}
