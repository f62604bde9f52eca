// SPDX-License-Identifier: Apache-2.0
//
// otfs-radar: delay-Doppler MIMO radar simulation and estimation toolkit.

#include "otfsradar/crlb.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <Eigen/Dense>

#include "otfsradar/dd_channel.hpp"
#include "otfsradar/io_format.hpp"

namespace otfsradar {

namespace {

using EMatd = Eigen::MatrixXd;
using EVecC = Eigen::Matrix<Complex, Eigen::Dynamic, 1>;

CVec eval_s(const TargetParams& tp, const SystemConfig& cfg, const CVec& x) {
    const CVec u = psi_apply(cfg, tp.tau_s, tp.nu_hz, x);
    const CVec b = steering(tp.phi_rad, cfg.n_antennas);
    const Complex kappa = beamform_response(cfg, tp.phi_rad);
    const Complex h = std::polar(tp.amplitude, tp.phase);
    CVec s(static_cast<std::size_t>(cfg.n_antennas) * u.size());
    for (int q = 0; q < cfg.n_antennas; ++q) {
        const Complex w = h * b[static_cast<std::size_t>(q)] * kappa;
        Complex* dst = s.data() + static_cast<std::size_t>(q) * u.size();
        for (std::size_t i = 0; i < u.size(); ++i) dst[i] = w * u[i];
    }
    return s;
}

void check_step(double base, double h, const char* what) {
    if (!(h > 0.0) || base + h == base || base - h == base)
        throw StepUnderflow(std::string("finite-difference step for ") + what +
                            " rounds away at base value " + std::to_string(base));
}

} // namespace

TargetParams TargetParams::from_truth(const TargetTruth& t) {
    TargetParams p;
    p.amplitude = std::abs(t.rotated_gain);
    p.phase = std::arg(t.rotated_gain);
    p.tau_s = t.delay_s;
    p.nu_hz = t.doppler_hz;
    p.phi_rad = t.aoa_rad;
    return p;
}

CVec signal_model_s(const TargetParams& tp, const SystemConfig& cfg, const DDFrame& frame) {
    return eval_s(tp, cfg, vectorize(frame));
}

FisherMatrix fisher(const std::vector<TargetParams>& targets, const SystemConfig& cfg,
                    const DDFrame& frame, double n0) {
    if (!(n0 > 0.0)) throw Error("fisher: N0 must be positive");
    const CVec x = vectorize(frame);
    const std::size_t p = targets.size();
    const std::size_t samples = static_cast<std::size_t>(cfg.n_antennas * cfg.grid_size());
    const std::size_t dim = 5 * p;

    const double tau_step = (1.0 / (cfg.m_delay * cfg.delta_f_hz)) * 1e-4;
    const double nu_step = (1.0 / (cfg.n_doppler * cfg.symbol_duration_s)) * 1e-4;
    const double phi_step = 1e-6;

    // Jacobian of the stacked signal, one column per parameter.
    Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic> jac(samples, dim);
    for (std::size_t t = 0; t < p; ++t) {
        const TargetParams& tp = targets[t];
        check_step(tp.tau_s, tau_step, "tau");
        check_step(tp.nu_hz, nu_step, "nu");
        check_step(tp.phi_rad, phi_step, "phi");

        // dA column: s evaluated at unit amplitude; dpsi column: j * s.
        TargetParams unit = tp;
        unit.amplitude = 1.0;
        const CVec s_unit = eval_s(unit, cfg, x);
        for (std::size_t i = 0; i < samples; ++i) {
            jac(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(5 * t + 0)) = s_unit[i];
            jac(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(5 * t + 1)) =
                Complex{0.0, 1.0} * (tp.amplitude * s_unit[i]);
        }

        const auto central = [&](auto mutate, double h, std::size_t col) {
            TargetParams hi = tp, lo = tp;
            mutate(hi, +h);
            mutate(lo, -h);
            const CVec shi = eval_s(hi, cfg, x);
            const CVec slo = eval_s(lo, cfg, x);
            for (std::size_t i = 0; i < samples; ++i)
                jac(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(col)) =
                    (shi[i] - slo[i]) / (2.0 * h);
        };
        central([](TargetParams& q, double d) { q.tau_s += d; }, tau_step, 5 * t + 2);
        central([](TargetParams& q, double d) { q.nu_hz += d; }, nu_step, 5 * t + 3);
        central([](TargetParams& q, double d) { q.phi_rad += d; }, phi_step, 5 * t + 4);
    }

    const EMatd info = (2.0 / n0) * (jac.adjoint() * jac).real();
    FisherMatrix out;
    out.dim = dim;
    out.n0 = n0;
    out.data.resize(dim * dim);
    for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = 0; j < dim; ++j)
            out.data[i * dim + j] = 0.5 * (info(static_cast<Eigen::Index>(i),
                                                static_cast<Eigen::Index>(j)) +
                                           info(static_cast<Eigen::Index>(j),
                                                static_cast<Eigen::Index>(i)));
    return out;
}

CrlbReport crlb_bounds(const FisherMatrix& f, const SearchGrid& grid) {
    const std::size_t dim = f.dim;
    Eigen::Map<const EMatd> info(f.data.data(), static_cast<Eigen::Index>(dim),
                                 static_cast<Eigen::Index>(dim));

    // The raw matrix mixes units spanning many orders of magnitude (seconds
    // vs radians), so invert the diagonally equilibrated form
    // I = D Itilde D, D = diag(sqrt(I_ii)).
    EMatd d_inv = EMatd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < dim; ++i) {
        const double di = info(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
        if (!(di > 0.0))
            throw SingularFisher("Fisher matrix has no information along parameter index " +
                                 std::to_string(i));
        d_inv(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 1.0 / std::sqrt(di);
    }
    const EMatd scaled = d_inv * info * d_inv;

    Eigen::SelfAdjointEigenSolver<EMatd> es(scaled);
    if (es.info() != Eigen::Success) throw SingularFisher("eigendecomposition failed");
    const double lmin = es.eigenvalues()(0);
    const double lmax = es.eigenvalues()(static_cast<Eigen::Index>(dim) - 1);
    if (!(lmin > 0.0) || lmax / lmin > 1e12) {
        std::ostringstream os;
        os << "Fisher matrix is singular to working precision; null direction (";
        for (std::size_t i = 0; i < dim; ++i)
            os << (i ? "," : "") << format_double(es.eigenvectors()(static_cast<Eigen::Index>(i), 0));
        os << ")";
        throw SingularFisher(os.str());
    }

    const EMatd inv_scaled =
        es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() *
        es.eigenvectors().transpose();
    const EMatd inv = d_inv * inv_scaled * d_inv;

    CrlbReport rep;
    const std::size_t p = dim / 5;
    for (std::size_t t = 0; t < p; ++t) {
        rep.var_amplitude.push_back(inv(static_cast<Eigen::Index>(5 * t + 0),
                                        static_cast<Eigen::Index>(5 * t + 0)));
        rep.var_phase_rad2.push_back(inv(static_cast<Eigen::Index>(5 * t + 1),
                                         static_cast<Eigen::Index>(5 * t + 1)));
        rep.var_tau_s2.push_back(inv(static_cast<Eigen::Index>(5 * t + 2),
                                     static_cast<Eigen::Index>(5 * t + 2)));
        rep.var_nu_hz2.push_back(inv(static_cast<Eigen::Index>(5 * t + 3),
                                     static_cast<Eigen::Index>(5 * t + 3)));
        rep.var_phi_rad2.push_back(inv(static_cast<Eigen::Index>(5 * t + 4),
                                       static_cast<Eigen::Index>(5 * t + 4)));
    }
    rep.floor_tau_s = grid.final_tau_step() / std::sqrt(12.0);
    rep.floor_nu_hz = grid.final_nu_step() / std::sqrt(12.0);
    return rep;
}

void write_crlb_csv(const std::vector<CrlbSweepRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open output file: " + path);
    out << "snr_db,crlb_tau_s2,crlb_nu_hz2,crlb_phi_rad2,floor_tau_s,floor_nu_hz\n";
    for (const CrlbSweepRow& r : rows)
        out << format_double(r.snr_db) << ',' << format_double(r.crlb_tau_s2) << ','
            << format_double(r.crlb_nu_hz2) << ',' << format_double(r.crlb_phi_rad2) << ','
            << format_double(r.floor_tau_s) << ',' << format_double(r.floor_nu_hz) << '\n';
    if (!out) throw IoError("write failed: " + path);
}

} // namespace otfsradar
