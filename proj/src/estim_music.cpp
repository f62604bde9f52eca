// SPDX-License-Identifier: Apache-2.0
//
// otfs-radar: delay-Doppler MIMO radar simulation and estimation toolkit.

#include "otfsradar/estim_music.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include <Eigen/Dense>

#include "otfsradar/dd_channel.hpp"
#include "otfsradar/io_format.hpp"
#include "otfsradar/kernels.hpp"

namespace otfsradar {

namespace {

constexpr double kPi = std::numbers::pi;

using EMat = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>;

EMat to_eigen(const CMatrix& m) {
    return Eigen::Map<const Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic,
                                          Eigen::RowMajor>>(
        m.data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols()));
}

/// Descending Hermitian eigendecomposition of R.
void eigh_descending(const CMatrix& r, Eigen::VectorXd& evals, EMat& evecs) {
    Eigen::SelfAdjointEigenSolver<EMat> solver(to_eigen(r));
    if (solver.info() != Eigen::Success)
        throw EigenFailure("eigendecomposition of the covariance failed");
    const Eigen::Index n = solver.eigenvalues().size();
    evals.resize(n);
    evecs.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        evals(i) = solver.eigenvalues()(n - 1 - i);
        evecs.col(i) = solver.eigenvectors().col(n - 1 - i);
    }
}

} // namespace

CMatrix unstack(std::span<const Complex> y, int n_antennas) {
    if (n_antennas < 1 || y.size() % static_cast<std::size_t>(n_antennas) != 0)
        throw LengthMismatch("unstack: vector length " + std::to_string(y.size()) +
                             " is not a multiple of N_a = " + std::to_string(n_antennas));
    const std::size_t nm = y.size() / static_cast<std::size_t>(n_antennas);
    CMatrix u(static_cast<std::size_t>(n_antennas), nm);
    std::copy(y.begin(), y.end(), u.data());
    return u;
}

CVec restack(const CMatrix& u) { return {u.data(), u.data() + u.size()}; }

CMatrix covariance(const CMatrix& u) {
    const std::size_t na = u.rows();
    CMatrix r(na, na);
    for (std::size_t i = 0; i < na; ++i) {
        for (std::size_t j = i; j < na; ++j) {
            // R = U U^H, so R_ij = row_i . conj(row_j)
            const Complex v = kernels::cdotc(u.row(j), u.row(i));
            r(i, j) = v;
            r(j, i) = std::conj(v);
        }
    }
    return r;
}

NoiseProjector noise_projector(const CMatrix& r, int p_sources) {
    const int na = static_cast<int>(r.rows());
    if (p_sources < 1 || p_sources >= na)
        throw Error("noise_projector: need 1 <= p_sources < N_a");

    Eigen::VectorXd evals;
    EMat evecs;
    eigh_descending(r, evals, evecs);

    const double scale = std::max(std::abs(evals(0)), 0.0);
    if (std::abs(evals(p_sources - 1) - evals(p_sources)) <= 1e-12 * std::max(scale, 1e-300))
        throw SubspaceDegenerate("signal/noise eigenvalue split is ambiguous at p = " +
                                 std::to_string(p_sources));

    NoiseProjector proj;
    proj.p_sources = p_sources;
    proj.c = CMatrix(static_cast<std::size_t>(na), static_cast<std::size_t>(na));
    EMat vn = evecs.rightCols(na - p_sources);
    EMat c = vn * vn.adjoint();
    for (int i = 0; i < na; ++i)
        for (int j = 0; j < na; ++j)
            proj.c(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = c(i, j);
    return proj;
}

MusicSpectrum spectral_music(const CMatrix& c_proj, std::span<const double> angle_grid_rad,
                             int top_p) {
    const int na = static_cast<int>(c_proj.rows());
    MusicSpectrum out;
    out.angles_rad.assign(angle_grid_rad.begin(), angle_grid_rad.end());
    out.values.resize(out.angles_rad.size());

    CVec ca(static_cast<std::size_t>(na));
    for (std::size_t i = 0; i < out.angles_rad.size(); ++i) {
        const CVec a = steering(out.angles_rad[i], na);
        kernels::cmatvec(c_proj, a, ca);
        const double q = std::abs(kernels::cdotc(a, ca));
        out.values[i] = q > 0.0 ? 1.0 / q : std::numeric_limits<double>::infinity();
    }

    // Local maxima (endpoints qualify against their single neighbor).
    std::vector<std::size_t> peaks;
    const std::size_t n = out.values.size();
    for (std::size_t i = 0; i < n; ++i) {
        const bool left_ok = (i == 0) || out.values[i] >= out.values[i - 1];
        const bool right_ok = (i + 1 == n) || out.values[i] >= out.values[i + 1];
        if (left_ok && right_ok) peaks.push_back(i);
    }
    std::sort(peaks.begin(), peaks.end(),
              [&](std::size_t a, std::size_t b) { return out.values[a] > out.values[b]; });
    for (std::size_t i = 0; i < peaks.size() && static_cast<int>(i) < top_p; ++i)
        out.peak_angles_rad.push_back(out.angles_rad[peaks[i]]);
    return out;
}

std::vector<double> root_music(const NoiseProjector& proj, int p) {
    const int na = static_cast<int>(proj.c.rows());
    if (p < 1 || p >= na) throw Error("root_music: need 1 <= p < N_a");

    // c_i = sum of the i-th subdiagonal of C (i >= 0); c_{-i} = conj(c_i)
    // since C is Hermitian. Coefficient of z^j is c_{j-(na-1)}.
    const int deg = 2 * na - 2;
    CVec coef(static_cast<std::size_t>(deg + 1));
    for (int i = 0; i < na; ++i) {
        Complex ci = 0.0;
        for (int row = i; row < na; ++row)
            ci += proj.c(static_cast<std::size_t>(row), static_cast<std::size_t>(row - i));
        coef[static_cast<std::size_t>((na - 1) + i)] = ci;
        coef[static_cast<std::size_t>((na - 1) - i)] = std::conj(ci);
    }

    const Complex lead = coef[static_cast<std::size_t>(deg)];
    if (std::abs(lead) < 1e-300)
        throw RootFindingFailure("MUSIC polynomial has a vanishing leading coefficient");

    // Companion-matrix rooting on the monic normalized polynomial.
    EMat companion = EMat::Zero(deg, deg);
    for (int i = 0; i < deg; ++i) {
        companion(i, deg - 1) = -coef[static_cast<std::size_t>(i)] / lead;
        if (i > 0) companion(i, i - 1) = 1.0;
    }
    Eigen::ComplexEigenSolver<EMat> solver(companion, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success)
        throw RootFindingFailure("companion-matrix eigenvalue iteration did not converge");

    std::vector<Complex> inside;
    for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
        const Complex z = solver.eigenvalues()(i);
        if (std::abs(z) <= 1.0 + 1e-10) inside.push_back(z);
    }
    if (static_cast<int>(inside.size()) < p)
        throw InsufficientRoots("only " + std::to_string(inside.size()) +
                                " roots inside the unit disk, need " + std::to_string(p));
    std::sort(inside.begin(), inside.end(), [](const Complex& a, const Complex& b) {
        return std::abs(1.0 - std::abs(a)) < std::abs(1.0 - std::abs(b));
    });

    std::vector<double> phis;
    for (int i = 0; i < p; ++i) phis.push_back(-std::asin(std::arg(inside[static_cast<std::size_t>(i)]) / kPi));
    std::sort(phis.begin(), phis.end());
    return phis;
}

int estimate_source_count(const CMatrix& r) {
    Eigen::VectorXd evals;
    EMat evecs;
    eigh_descending(r, evals, evecs);
    const int na = static_cast<int>(evals.size());
    int best_k = 1;
    double best_ratio = 0.0;
    for (int k = 1; k < na; ++k) {
        const double denom = std::max(evals(k), 1e-300);
        const double ratio = evals(k - 1) / denom;
        if (ratio > best_ratio) {
            best_ratio = ratio;
            best_k = k;
        }
    }
    return best_k;
}

void write_spectrum_csv(const MusicSpectrum& s, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open output file: " + path);
    out << "angle_deg,pseudo_spectrum\n";
    for (std::size_t i = 0; i < s.angles_rad.size(); ++i)
        out << format_double(s.angles_rad[i] * 180.0 / kPi) << ','
            << format_double(s.values[i]) << '\n';
    if (!out) throw IoError("write failed: " + path);
}

} // namespace otfsradar
