// SPDX-License-Identifier: Apache-2.0
//
// otfs-radar: delay-Doppler MIMO radar simulation and estimation toolkit.

#include "otfsradar/dd_channel.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "otfsradar/kernels.hpp"
#include "otfsradar/rng.hpp"

namespace otfsradar {

namespace {

constexpr double kPi = std::numbers::pi;

// The Dirichlet-ratio factor (1 - e^{j 2 pi n y}) / (1 - e^{j 2 pi y}) is a
// 0/0 form when y is an integer; its limit there is n. Treat exponents within
// 1e-9 rad of a multiple of 2 pi as the limit case.
constexpr double kRatioTol = 1e-9 / (2.0 * kPi);

/// Quotient form of the ratio, used by the element-wise oracle path.
Complex dirichlet_ratio_quotient(double y, int n) {
    if (std::abs(y - std::round(y)) < kRatioTol) return {static_cast<double>(n), 0.0};
    const Complex num = 1.0 - std::polar(1.0, 2.0 * kPi * n * y);
    const Complex den = 1.0 - std::polar(1.0, 2.0 * kPi * y);
    return num / den;
}

/// sin form of the same ratio, e^{j pi (n-1) y} sin(pi n y) / sin(pi y);
/// numerically better behaved near the singularity, used by the factored
/// assembly path.
Complex dirichlet_ratio_sin(double y, int n) {
    if (std::abs(y - std::round(y)) < kRatioTol) return {static_cast<double>(n), 0.0};
    return std::polar(std::sin(kPi * n * y) / std::sin(kPi * y), kPi * (n - 1) * y);
}

/// Factored per-target coupling terms. The Dirichlet ratios are periodic in
/// the integer index offsets, so the whole NM x NM matrix reduces to
///   Psi[(k,l),(k',l')] = A[(k'-k) mod N] * B[(l'-l) mod M] * C[l']
///                        * (l' > l ? E[k'] : 1)
/// with the 1/(NM) normalization folded into A and B.
struct PsiFactors {
    CVec doppler;   // A, length N, includes 1/N
    CVec delay;     // B, length M, includes 1/M
    CVec phase_nu;  // C[l'] = e^{-j 2 pi nu l' / (M df)}
    CVec isi_phase; // E[k'] = e^{-j 2 pi (k'/N + nu T)}
};

PsiFactors psi_factors(const SystemConfig& cfg, double tau_s, double nu_hz) {
    const int n = cfg.n_doppler, m = cfg.m_delay;
    const double t_sym = cfg.symbol_duration_s, df = cfg.delta_f_hz;
    PsiFactors f;
    f.doppler.resize(static_cast<std::size_t>(n));
    f.delay.resize(static_cast<std::size_t>(m));
    f.phase_nu.resize(static_cast<std::size_t>(m));
    f.isi_phase.resize(static_cast<std::size_t>(n));
    for (int d = 0; d < n; ++d)
        f.doppler[static_cast<std::size_t>(d)] =
            dirichlet_ratio_sin((d + nu_hz * n * t_sym) / n, n) / static_cast<double>(n);
    for (int e = 0; e < m; ++e)
        f.delay[static_cast<std::size_t>(e)] =
            dirichlet_ratio_sin((e + tau_s * m * df) / m, m) / static_cast<double>(m);
    for (int lp = 0; lp < m; ++lp)
        f.phase_nu[static_cast<std::size_t>(lp)] = std::polar(1.0, -2.0 * kPi * nu_hz * lp / (m * df));
    for (int kp = 0; kp < n; ++kp)
        f.isi_phase[static_cast<std::size_t>(kp)] =
            std::polar(1.0, -2.0 * kPi * (static_cast<double>(kp) / n + nu_hz * t_sym));
    return f;
}

void check_delay_in_frame(const SystemConfig& cfg, double tau_s) {
    if (tau_s < 0.0 || !(tau_s < cfg.frame_duration_s()))
        throw DelayOutOfFrame("delay " + std::to_string(tau_s) + " s outside [0, N*T)");
}

std::uint32_t checked_u32(std::size_t v) { return static_cast<std::uint32_t>(v); }

} // namespace

CVec steering(double phi_rad, int n_antennas) {
    if (std::abs(phi_rad) > kPi / 2.0 + 1e-12)
        throw AngleOutOfRange("AoA " + std::to_string(phi_rad) + " rad outside [-pi/2, pi/2]");
    CVec v(static_cast<std::size_t>(n_antennas));
    const double s = std::sin(phi_rad);
    for (int q = 0; q < n_antennas; ++q) v[static_cast<std::size_t>(q)] = std::polar(1.0, q * kPi * s);
    return v;
}

Complex psi_element(const SystemConfig& cfg, double tau_s, double nu_hz, int k, int l, int kp,
                    int lp) {
    const int n = cfg.n_doppler, m = cfg.m_delay;
    const double t_sym = cfg.symbol_duration_s, df = cfg.delta_f_hz;
    const double yd = (kp - k + nu_hz * n * t_sym) / n;
    const double yt = (lp - l + tau_s * m * df) / m;
    Complex v = dirichlet_ratio_quotient(yd, n) * dirichlet_ratio_quotient(yt, m) /
                static_cast<double>(n * m);
    v *= std::polar(1.0, -2.0 * kPi * nu_hz * lp / (m * df));
    // l' <= l couples within the current frame (ICI set); l' > l wraps from
    // the previous frame (ISI set) and picks up the extra phase.
    if (lp > l) v *= std::polar(1.0, -2.0 * kPi * (static_cast<double>(kp) / n + nu_hz * t_sym));
    return v;
}

PsiMatrix psi_matrix(const SystemConfig& cfg, double tau_s, double nu_hz) {
    check_delay_in_frame(cfg, tau_s);
    const int n = cfg.n_doppler, m = cfg.m_delay;
    const PsiFactors f = psi_factors(cfg, tau_s, nu_hz);

    PsiMatrix out;
    out.tau_s = tau_s;
    out.nu_hz = nu_hz;
    out.m = CMatrix(static_cast<std::size_t>(n * m), static_cast<std::size_t>(n * m));
    for (int k = 0; k < n; ++k)
        for (int kp = 0; kp < n; ++kp) {
            const Complex a = f.doppler[static_cast<std::size_t>((kp - k + n) % n)];
            const Complex a_isi = a * f.isi_phase[static_cast<std::size_t>(kp)];
            for (int l = 0; l < m; ++l) {
                Complex* row = out.m.data() +
                               (static_cast<std::size_t>(k * m + l)) * out.m.cols() +
                               static_cast<std::size_t>(kp * m);
                for (int lp = 0; lp < m; ++lp) {
                    const Complex b = f.delay[static_cast<std::size_t>((lp - l + m) % m)] *
                                      f.phase_nu[static_cast<std::size_t>(lp)];
                    row[lp] = (lp > l ? a_isi : a) * b;
                }
            }
        }
    return out;
}

CVec psi_apply(const SystemConfig& cfg, double tau_s, double nu_hz,
               std::span<const Complex> x) {
    check_delay_in_frame(cfg, tau_s);
    const int n = cfg.n_doppler, m = cfg.m_delay;
    const PsiFactors f = psi_factors(cfg, tau_s, nu_hz);

    // xw[k', l'] = x[k', l'] * C[l']
    CVec xw(x.size());
    for (int kp = 0; kp < n; ++kp)
        for (int lp = 0; lp < m; ++lp)
            xw[static_cast<std::size_t>(kp * m + lp)] =
                x[static_cast<std::size_t>(kp * m + lp)] * f.phase_nu[static_cast<std::size_t>(lp)];

    CVec y(x.size());
    CVec row(static_cast<std::size_t>(m));
    for (int k = 0; k < n; ++k)
        for (int l = 0; l < m; ++l) {
            // row over l' for fixed (l): B[(l'-l) mod M], split by the frame
            // boundary at l' = l.
            Complex ici = 0.0, isi = 0.0;
            Complex acc = 0.0;
            for (int kp = 0; kp < n; ++kp) {
                const Complex* xk = xw.data() + static_cast<std::size_t>(kp * m);
                ici = 0.0;
                isi = 0.0;
                for (int lp = 0; lp <= l; ++lp)
                    ici += f.delay[static_cast<std::size_t>((lp - l + m) % m)] * xk[lp];
                for (int lp = l + 1; lp < m; ++lp)
                    isi += f.delay[static_cast<std::size_t>(lp - l)] * xk[lp];
                acc += f.doppler[static_cast<std::size_t>((kp - k + n) % n)] *
                       (ici + f.isi_phase[static_cast<std::size_t>(kp)] * isi);
            }
            y[static_cast<std::size_t>(k * m + l)] = acc;
        }
    return y;
}

Complex beamform_response(const SystemConfig& cfg, double phi_rad) {
    const CVec a = steering(phi_rad, cfg.n_antennas);
    return kernels::cdotc(a, cfg.beamformer);
}

CMatrix channel_matrix(const SystemConfig& cfg, double tau_s, double nu_hz, double phi_rad) {
    const PsiMatrix psi = psi_matrix(cfg, tau_s, nu_hz);
    const CVec b = steering(phi_rad, cfg.n_antennas);
    const Complex kappa = beamform_response(cfg, phi_rad);
    const std::size_t nm = psi.m.rows();

    CMatrix g(static_cast<std::size_t>(cfg.n_antennas) * nm, nm);
    for (int q = 0; q < cfg.n_antennas; ++q) {
        const Complex s = b[static_cast<std::size_t>(q)] * kappa;
        for (std::size_t r = 0; r < nm; ++r) {
            Complex* dst = g.data() + (static_cast<std::size_t>(q) * nm + r) * nm;
            const Complex* src = psi.m.data() + r * nm;
            for (std::size_t c = 0; c < nm; ++c) dst[c] = s * src[c];
        }
    }
    return g;
}

double noise_var_from_snr(const SystemConfig& cfg, double range_m, double snr_rad_db) {
    if (!(range_m > 0.0)) throw Error("noise_var_from_snr: range must be positive");
    const double lambda = kSpeedOfLight / cfg.carrier_hz;
    const double snr = std::pow(10.0, snr_rad_db / 10.0);
    const double four_pi3 = std::pow(4.0 * kPi, 3);
    return lambda * lambda * cfg.rcs_m2 * cfg.antenna_gain * cfg.antenna_gain * cfg.p_avg /
           (four_pi3 * std::pow(range_m, 4) * snr);
}

double effective_noise_var(const SystemConfig& cfg, double snr_rad_db) {
    return cfg.p_avg / std::pow(10.0, snr_rad_db / 10.0);
}

RxVector simulate_rx_with_noise_var(const Scenario& s, const DDFrame& frame, double sigma_w2,
                                    std::uint64_t seed) {
    const SystemConfig& cfg = s.config;
    const std::size_t nm = static_cast<std::size_t>(cfg.grid_size());
    const CVec x = vectorize(frame);

    RxVector rx;
    rx.noise_var = sigma_w2;
    rx.samples.assign(static_cast<std::size_t>(cfg.n_antennas) * nm, Complex{0.0, 0.0});

    for (const TargetTruth& t : s.targets) {
        const CVec u = psi_apply(cfg, t.delay_s, t.doppler_hz, x);
        const CVec b = steering(t.aoa_rad, cfg.n_antennas);
        const Complex kappa = beamform_response(cfg, t.aoa_rad);
        for (int q = 0; q < cfg.n_antennas; ++q) {
            const Complex w = t.rotated_gain * b[static_cast<std::size_t>(q)] * kappa;
            kernels::caxpy(w, u,
                           std::span<Complex>(rx.samples.data() + static_cast<std::size_t>(q) * nm,
                                              nm));
        }
    }

    if (sigma_w2 > 0.0) {
        const CounterRng rng(CounterRng::derive({seed, rng_stream::noise}));
        const double amp = std::sqrt(sigma_w2);
        for (std::size_t i = 0; i < rx.samples.size(); ++i)
            rx.samples[i] += amp * rng.std_complex_gaussian(i);
    }
    return rx;
}

RxVector simulate_rx(const Scenario& s, const DDFrame& frame, double snr_rad_db,
                     std::uint64_t seed) {
    return simulate_rx_with_noise_var(s, frame, effective_noise_var(s.config, snr_rad_db), seed);
}

RxVector oracle_rx_dd(const Scenario& s, const DDFrame& frame) {
    const SystemConfig& cfg = s.config;
    const int n = cfg.n_doppler, m = cfg.m_delay, na = cfg.n_antennas;
    const int p = s.target_count();

    // Per-target antenna-independent spatial factors.
    std::vector<CVec> b(static_cast<std::size_t>(p));
    std::vector<Complex> w(static_cast<std::size_t>(p));
    for (int i = 0; i < p; ++i) {
        const TargetTruth& t = s.targets[static_cast<std::size_t>(i)];
        b[static_cast<std::size_t>(i)] = steering(t.aoa_rad, na);
        w[static_cast<std::size_t>(i)] = t.rotated_gain * beamform_response(cfg, t.aoa_rad);
    }

    RxVector rx;
    rx.noise_var = 0.0;
    rx.samples.assign(static_cast<std::size_t>(na * n * m), Complex{0.0, 0.0});
    for (int q = 0; q < na; ++q)
        for (int k = 0; k < n; ++k)
            for (int l = 0; l < m; ++l) {
                Complex acc = 0.0;
                for (int i = 0; i < p; ++i) {
                    const TargetTruth& t = s.targets[static_cast<std::size_t>(i)];
                    Complex inner = 0.0;
                    for (int kp = 0; kp < n; ++kp)
                        for (int lp = 0; lp < m; ++lp)
                            inner += psi_element(cfg, t.delay_s, t.doppler_hz, k, l, kp, lp) *
                                     frame.symbols(static_cast<std::size_t>(kp),
                                                   static_cast<std::size_t>(lp));
                    acc += w[static_cast<std::size_t>(i)] *
                           b[static_cast<std::size_t>(i)][static_cast<std::size_t>(q)] * inner;
                }
                rx.samples[static_cast<std::size_t>(q * n * m + k * m + l)] = acc;
            }
    return rx;
}

namespace {

struct RxHeader {
    char magic[4];
    std::uint32_t n, m, flags;
    std::uint32_t n_antennas, reserved;
    double noise_var;
};
static_assert(sizeof(RxHeader) == 32);

} // namespace

void save_rx(const RxVector& rx, const SystemConfig& cfg, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open output file: " + path);
    RxHeader h{};
    std::memcpy(h.magic, "OTFR", 4);
    h.n = checked_u32(static_cast<std::size_t>(cfg.n_doppler));
    h.m = checked_u32(static_cast<std::size_t>(cfg.m_delay));
    h.flags = 0;
    h.n_antennas = checked_u32(static_cast<std::size_t>(cfg.n_antennas));
    h.reserved = 0;
    h.noise_var = rx.noise_var;
    out.write(reinterpret_cast<const char*>(&h), sizeof(h));
    out.write(reinterpret_cast<const char*>(rx.samples.data()),
              static_cast<std::streamsize>(rx.samples.size() * sizeof(Complex)));
    if (!out) throw IoError("write failed: " + path);
}

RxVector load_rx(const std::string& path, int* n_doppler, int* m_delay, int* n_antennas) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    RxHeader h{};
    in.read(reinterpret_cast<char*>(&h), sizeof(h));
    if (!in || std::memcmp(h.magic, "OTFR", 4) != 0) throw IoError("bad magic in " + path);
    const std::size_t count =
        static_cast<std::size_t>(h.n) * static_cast<std::size_t>(h.m) * h.n_antennas;
    if (count == 0 || count > (1u << 28)) throw IoError("implausible dimensions in " + path);
    RxVector rx;
    rx.noise_var = h.noise_var;
    rx.samples.resize(count);
    in.read(reinterpret_cast<char*>(rx.samples.data()),
            static_cast<std::streamsize>(count * sizeof(Complex)));
    if (!in) throw IoError("truncated payload in " + path);
    if (n_doppler) *n_doppler = static_cast<int>(h.n);
    if (m_delay) *m_delay = static_cast<int>(h.m);
    if (n_antennas) *n_antennas = static_cast<int>(h.n_antennas);
    return rx;
}

} // namespace otfsradar
