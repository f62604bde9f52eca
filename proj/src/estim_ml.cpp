// SPDX-License-Identifier: Apache-2.0
//
// otfs-radar: delay-Doppler MIMO radar simulation and estimation toolkit.

#include "otfsradar/estim_ml.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <Eigen/Dense>

#include "otfsradar/estim_music.hpp"
#include "otfsradar/io_format.hpp"
#include "otfsradar/kernels.hpp"

namespace otfsradar {

namespace {

constexpr double kPi = std::numbers::pi;

using EMat = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>;
using EVec = Eigen::Matrix<Complex, Eigen::Dynamic, 1>;
using RowMap = Eigen::Map<const Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic,
                                              Eigen::RowMajor>>;

std::vector<double> linspace(double lo, double hi, int count) {
    std::vector<double> pts(static_cast<std::size_t>(count));
    if (count == 1) {
        pts[0] = 0.5 * (lo + hi);
        return pts;
    }
    const double step = (hi - lo) / (count - 1);
    for (int i = 0; i < count; ++i) pts[static_cast<std::size_t>(i)] = lo + i * step;
    return pts;
}

/// Axis for one refinement level: a window of `count` points spanning `span`
/// centered at the incumbent, clamped into the level-0 range.
std::vector<double> refined_axis(double center, double lo0, double hi0, double span, int count) {
    if (span >= hi0 - lo0) return linspace(lo0, hi0, count);
    const double half = span / 2.0;
    const double c = std::clamp(center, lo0 + half, hi0 - half);
    return linspace(c - half, c + half, count);
}

double axis_step0(const std::vector<double>& pts) {
    return pts.size() > 1 ? (pts.back() - pts.front()) / static_cast<double>(pts.size() - 1) : 0.0;
}

double final_step(const std::vector<double>& pts, int levels, double shrink, int ppa) {
    if (pts.size() < 2) return 0.0;
    const double span0 = pts.back() - pts.front();
    if (levels <= 0) return axis_step0(pts);
    return span0 * std::pow(shrink, levels) / static_cast<double>(ppa - 1);
}

/// g(theta) = (b(phi) (x) Psi(tau,nu) x) * (a^H(phi) f_bf), assembled as the
/// full N_a NM vector.
CVec channel_applied(const SystemConfig& cfg, double tau, double nu, double phi, const CVec& x) {
    const CVec u = psi_apply(cfg, tau, nu, x);
    const CVec b = steering(phi, cfg.n_antennas);
    const Complex kappa = beamform_response(cfg, phi);
    CVec g(static_cast<std::size_t>(cfg.n_antennas) * u.size());
    for (int q = 0; q < cfg.n_antennas; ++q) {
        const Complex s = b[static_cast<std::size_t>(q)] * kappa;
        Complex* dst = g.data() + static_cast<std::size_t>(q) * u.size();
        for (std::size_t i = 0; i < u.size(); ++i) dst[i] = s * u[i];
    }
    return g;
}

std::vector<Complex> solve_gains_from_vectors(const CVec& y, const std::vector<CVec>& gvecs) {
    const int p = static_cast<int>(gvecs.size());
    EMat gram(p, p);
    EVec rhs(p);
    for (int i = 0; i < p; ++i) {
        for (int j = 0; j < p; ++j)
            gram(i, j) = kernels::cdotc(gvecs[static_cast<std::size_t>(i)],
                                        gvecs[static_cast<std::size_t>(j)]);
        rhs(i) = kernels::cdotc(gvecs[static_cast<std::size_t>(i)], y);
    }
    Eigen::JacobiSVD<EMat> svd(gram, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const double smax = svd.singularValues()(0);
    const double smin = svd.singularValues()(p - 1);
    if (!(smin > 0.0) || smax / smin > 1e12)
        throw SingularSystem("gain system is ill-conditioned (near-coincident targets)");
    const EVec h = svd.solve(rhs);
    return {h.data(), h.data() + p};
}

struct Scan3dResult {
    double tau = 0.0, nu = 0.0, phi = 0.0;
    std::vector<double> trace;
};

/// Concentrated single-target objective |g^H y|^2 / ||g||^2 for one cell.
/// Every candidate assembles its full channel and applies it to the frame;
/// the joint 3D baseline has no decoupling to exploit, which is what makes
/// it expensive next to the two-step method.
double sota_objective(const SystemConfig& cfg, const CVec& y, const CVec& x, double tau,
                      double nu, double phi) {
    const CMatrix g = channel_matrix(cfg, tau, nu, phi);
    CVec gx(g.rows());
    kernels::cmatvec(g, x, gx);
    const double den = kernels::cnrm2sq(gx);
    if (!(den > 0.0)) return -std::numeric_limits<double>::infinity();
    return std::norm(kernels::cdotc(gx, y)) / den;
}

Scan3dResult scan_3d(const SystemConfig& cfg, const CVec& y_res, const CVec& x,
                     const SearchGrid& grid) {
    Scan3dResult best;
    double best_obj = -std::numeric_limits<double>::infinity();
    std::vector<double> taus = grid.tau_points, nus = grid.nu_points, phis = grid.phi_points;

    const double tau_lo = grid.tau_points.front(), tau_hi = grid.tau_points.back();
    const double nu_lo = grid.nu_points.front(), nu_hi = grid.nu_points.back();
    const double phi_lo = grid.phi_points.front(), phi_hi = grid.phi_points.back();

    for (int level = 0; level <= grid.levels; ++level) {
        if (level > 0) {
            const double f = std::pow(grid.shrink, level);
            taus = refined_axis(best.tau, tau_lo, tau_hi, (tau_hi - tau_lo) * f,
                                grid.points_per_axis);
            nus = refined_axis(best.nu, nu_lo, nu_hi, (nu_hi - nu_lo) * f, grid.points_per_axis);
            phis = refined_axis(best.phi, phi_lo, phi_hi, (phi_hi - phi_lo) * f,
                                grid.points_per_axis);
        }
        for (double t : taus)
            for (double n : nus)
                for (double ph : phis) {
                    const double obj = sota_objective(cfg, y_res, x, t, n, ph);
                    if (obj > best_obj) {
                        best_obj = obj;
                        best.tau = t;
                        best.nu = n;
                        best.phi = ph;
                    }
                }
        best.trace.push_back(best_obj);
    }
    return best;
}

} // namespace

double SearchGrid::final_tau_step() const {
    return final_step(tau_points, levels, shrink, points_per_axis);
}
double SearchGrid::final_nu_step() const {
    return final_step(nu_points, levels, shrink, points_per_axis);
}
double SearchGrid::final_phi_step() const {
    return final_step(phi_points, levels, shrink, points_per_axis);
}

SearchGrid SearchGrid::for_config(const SystemConfig& cfg, int phi_count) {
    SearchGrid g;
    const double tau_step = 1.0 / (cfg.m_delay * cfg.delta_f_hz);
    const double nu_step = 1.0 / (cfg.n_doppler * cfg.symbol_duration_s);
    for (int i = 0; i < cfg.m_delay; ++i) g.tau_points.push_back(i * tau_step);
    for (int j = 0; j < cfg.n_doppler; ++j) g.nu_points.push_back(j * nu_step);
    const int pc = phi_count > 0 ? phi_count : 4 * cfg.n_antennas + 1;
    g.phi_points = linspace(-kPi / 2.0, kPi / 2.0, pc);
    return g;
}

std::vector<Complex> solve_gains(const CVec& y, const CVec& x,
                                 const std::vector<CMatrix>& channels) {
    if (channels.empty()) throw Error("solve_gains: need at least one channel");
    std::vector<CVec> gvecs;
    gvecs.reserve(channels.size());
    for (const CMatrix& g : channels) {
        if (g.cols() != x.size() || g.rows() != y.size())
            throw LengthMismatch("solve_gains: channel dimensions do not match x/y");
        CVec gx(g.rows());
        kernels::cmatvec(g, x, gx);
        gvecs.push_back(std::move(gx));
    }
    return solve_gains_from_vectors(y, gvecs);
}

EstimateSet sota_ml_search(const CVec& y, const CVec& x, const SystemConfig& cfg, int p,
                           const SearchGrid& grid) {
    if (p < 1) throw Error("sota_ml_search: need p >= 1");

    std::vector<Scan3dResult> est(static_cast<std::size_t>(p));
    std::vector<CVec> gvecs(static_cast<std::size_t>(p));
    std::vector<Complex> gains(static_cast<std::size_t>(p), Complex{0.0, 0.0});
    std::vector<bool> valid(static_cast<std::size_t>(p), false);

    const int passes = p == 1 ? 1 : 2;
    for (int pass = 0; pass < passes; ++pass) {
        for (int tp = 0; tp < p; ++tp) {
            // residual against the currently estimated interferers
            CVec y_res = y;
            for (int q = 0; q < p; ++q)
                if (q != tp && valid[static_cast<std::size_t>(q)])
                    kernels::caxpy(-gains[static_cast<std::size_t>(q)],
                                   gvecs[static_cast<std::size_t>(q)], y_res);

            est[static_cast<std::size_t>(tp)] = scan_3d(cfg, y_res, x, grid);
            const Scan3dResult& r = est[static_cast<std::size_t>(tp)];
            gvecs[static_cast<std::size_t>(tp)] = channel_applied(cfg, r.tau, r.nu, r.phi, x);
            valid[static_cast<std::size_t>(tp)] = true;

            std::vector<CVec> active;
            std::vector<int> idx;
            for (int q = 0; q < p; ++q)
                if (valid[static_cast<std::size_t>(q)]) {
                    active.push_back(gvecs[static_cast<std::size_t>(q)]);
                    idx.push_back(q);
                }
            const std::vector<Complex> h = solve_gains_from_vectors(y, active);
            for (std::size_t i = 0; i < idx.size(); ++i)
                gains[static_cast<std::size_t>(idx[i])] = h[i];
        }
    }

    EstimateSet out;
    out.method = "sota-3d";
    std::vector<int> order(static_cast<std::size_t>(p));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return est[static_cast<std::size_t>(a)].phi <
                                         est[static_cast<std::size_t>(b)].phi; });
    for (int i : order) {
        const Scan3dResult& r = est[static_cast<std::size_t>(i)];
        out.targets.push_back({r.phi, r.tau, r.nu, gains[static_cast<std::size_t>(i)]});
        out.cost_traces.push_back(r.trace);
    }
    return out;
}

CVec spatial_combine(const CVec& y, double phi_hat, const SystemConfig& cfg) {
    const std::size_t na = static_cast<std::size_t>(cfg.n_antennas);
    if (na == 0 || y.size() % na != 0)
        throw LengthMismatch("spatial_combine: length not a multiple of N_a");
    const std::size_t nm = y.size() / na;
    const CVec b = steering(phi_hat, cfg.n_antennas);
    CVec out(nm, Complex{0.0, 0.0});
    for (std::size_t q = 0; q < na; ++q)
        kernels::caxpy(std::conj(b[q]) / static_cast<double>(na),
                       std::span<const Complex>(y.data() + q * nm, nm), out);
    return out;
}

double lmmse_cost(const CVec& x, const CVec& y_comb, const PsiMatrix& psi, double sigma_w2) {
    const std::size_t nm = psi.m.rows();
    if (psi.m.cols() != nm || x.size() != nm || y_comb.size() != nm)
        throw LengthMismatch("lmmse_cost: dimension mismatch");

    RowMap pmat(psi.m.data(), static_cast<Eigen::Index>(nm), static_cast<Eigen::Index>(nm));
    Eigen::Map<const EVec> ymap(y_comb.data(), static_cast<Eigen::Index>(nm));

    EMat a = pmat.adjoint() * pmat;
    a.diagonal().array() += sigma_w2;
    const EVec rhs = pmat.adjoint() * ymap;

    EVec z;
    Eigen::LLT<EMat> llt(a);
    if (llt.info() == Eigen::Success) {
        z = llt.solve(rhs);
    } else {
        // Gram matrix singular (possible when sigma^2 = 0): pseudo-inverse
        // with threshold 1e-10 * largest singular value.
        Eigen::JacobiSVD<EMat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
        svd.setThreshold(1e-10);
        z = svd.solve(rhs);
    }

    const std::span<const Complex> zs(z.data(), static_cast<std::size_t>(z.size()));
    const double zz = kernels::cnrm2sq(zs);
    if (!(zz > 0.0)) return kernels::cnrm2sq(x); // ZeroFilterOutput convention

    const Complex alpha = kernels::cdotc(zs, x) / zz;
    CVec resid = x;
    kernels::caxpy(-alpha, zs, resid);
    return kernels::cnrm2sq(resid);
}

DDSearchResult dd_search(const CVec& x, const CVec& y_comb, const SystemConfig& cfg,
                         double sigma_w2, const SearchGrid& grid) {
    DDSearchResult best;
    double best_cost = std::numeric_limits<double>::infinity();
    std::vector<double> taus = grid.tau_points, nus = grid.nu_points;
    const double tau_lo = grid.tau_points.front(), tau_hi = grid.tau_points.back();
    const double nu_lo = grid.nu_points.front(), nu_hi = grid.nu_points.back();

    for (int level = 0; level <= grid.levels; ++level) {
        if (level > 0) {
            const double f = std::pow(grid.shrink, level);
            taus = refined_axis(best.tau_s, tau_lo, tau_hi, (tau_hi - tau_lo) * f,
                                grid.points_per_axis);
            nus = refined_axis(best.nu_hz, nu_lo, nu_hi, (nu_hi - nu_lo) * f,
                               grid.points_per_axis);
        }
        for (double t : taus)
            for (double n : nus) {
                const PsiMatrix psi = psi_matrix(cfg, t, n);
                const double c = lmmse_cost(x, y_comb, psi, sigma_w2);
                if (c < best_cost) {
                    best_cost = c;
                    best.tau_s = t;
                    best.nu_hz = n;
                }
            }
        best.cost_trace.push_back(best_cost);
    }
    return best;
}

EstimateSet two_step_estimate(const CVec& y, const CVec& x, const SystemConfig& cfg, int p,
                              const SearchGrid& grid, double sigma_w2) {
    if (p < 1 || p >= cfg.n_antennas)
        throw Error("two_step_estimate: need 1 <= p < N_a");

    const CMatrix u = unstack(y, cfg.n_antennas);
    const CMatrix r = covariance(u);
    const NoiseProjector proj = noise_projector(r, p);
    const std::vector<double> phis = root_music(proj, p);

    EstimateSet out;
    out.method = "two-step";
    std::vector<CMatrix> channels;
    for (double phi : phis) {
        const CVec y_comb = spatial_combine(y, phi, cfg);
        const DDSearchResult dd =
            dd_search(x, y_comb, cfg, sigma_w2 / cfg.n_antennas, grid);
        out.targets.push_back({phi, dd.tau_s, dd.nu_hz, Complex{0.0, 0.0}});
        out.cost_traces.push_back(dd.cost_trace);
        channels.push_back(channel_matrix(cfg, dd.tau_s, dd.nu_hz, phi));
    }
    const std::vector<Complex> gains = solve_gains(y, x, channels);
    for (std::size_t i = 0; i < out.targets.size(); ++i) out.targets[i].gain = gains[i];
    return out;
}

nlohmann::json estimate_set_to_json(const EstimateSet& set, const SearchGrid& grid,
                                    std::uint64_t seed, const std::string& config_hash) {
    nlohmann::json j;
    j["method"] = set.method;
    j["seed"] = seed;
    j["config_hash"] = config_hash;
    j["grid"] = {{"levels", grid.levels},
                 {"shrink", grid.shrink},
                 {"points_per_axis", grid.points_per_axis},
                 {"tau_count", grid.tau_points.size()},
                 {"nu_count", grid.nu_points.size()},
                 {"phi_count", grid.phi_points.size()}};
    j["targets"] = nlohmann::json::array();
    for (std::size_t i = 0; i < set.targets.size(); ++i) {
        const TargetEstimate& t = set.targets[i];
        j["targets"].push_back({{"phi_deg", t.phi_rad * 180.0 / kPi},
                                {"tau_s", t.tau_s},
                                {"nu_hz", t.nu_hz},
                                {"h_re", t.gain.real()},
                                {"h_im", t.gain.imag()},
                                {"cost_trace", set.cost_traces[i]}});
    }
    return j;
}

} // namespace otfsradar
