// SPDX-License-Identifier: Apache-2.0
//
// otfs-radar: delay-Doppler MIMO radar simulation and estimation toolkit.

#include "otfsradar/otfs_signal.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "otfsradar/rng.hpp"

namespace otfsradar {

namespace {

constexpr double kPi = std::numbers::pi;

/// Twiddle table W[r] = e^{j 2 pi r / n}, r = 0..n-1.
CVec twiddle(int n) {
    CVec w(static_cast<std::size_t>(n));
    for (int r = 0; r < n; ++r) w[static_cast<std::size_t>(r)] = std::polar(1.0, 2.0 * kPi * r / n);
    return w;
}

int bits_for_order(int qam_order) {
    switch (qam_order) {
    case 4: return 2;
    case 16: return 4;
    case 64: return 6;
    default: throw UnsupportedConstellation("qam_order must be 4, 16 or 64, got " +
                                            std::to_string(qam_order));
    }
}

struct FileHeader {
    char magic[4];
    std::uint32_t n, m, flags;
};
static_assert(sizeof(FileHeader) == 16);

CMatrix load_matrix(const std::string& path, const char* magic, std::uint32_t* flags_out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    FileHeader h{};
    in.read(reinterpret_cast<char*>(&h), sizeof(h));
    if (!in || std::memcmp(h.magic, magic, 4) != 0)
        throw IoError("bad magic in " + path + " (expected " + magic + ")");
    if (h.n == 0 || h.m == 0 || h.n > (1u << 20) || h.m > (1u << 20))
        throw IoError("implausible dimensions in " + path);
    CMatrix out(h.n, h.m);
    in.read(reinterpret_cast<char*>(out.data()),
            static_cast<std::streamsize>(out.size() * sizeof(Complex)));
    if (!in) throw IoError("truncated payload in " + path);
    if (flags_out) *flags_out = h.flags;
    return out;
}

void save_matrix(const CMatrix& m, const std::string& path, const char* magic,
                 std::uint32_t flags) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open output file: " + path);
    FileHeader h{};
    std::memcpy(h.magic, magic, 4);
    h.n = static_cast<std::uint32_t>(m.rows());
    h.m = static_cast<std::uint32_t>(m.cols());
    h.flags = flags;
    out.write(reinterpret_cast<const char*>(&h), sizeof(h));
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(m.size() * sizeof(Complex)));
    if (!out) throw IoError("write failed: " + path);
}

} // namespace

DDFrame gen_dd_frame(const SystemConfig& cfg, int qam_order, std::uint64_t seed) {
    const int bits = bits_for_order(qam_order);
    const int side = 1 << (bits / 2); // square constellation side
    // Lattice levels {+-1, +-3, ...} have mean energy 2(Q-1)/3; scale so the
    // mean symbol energy is P_avg / N_a.
    const double scale =
        std::sqrt(cfg.p_avg / cfg.n_antennas / (2.0 * (qam_order - 1) / 3.0));

    CounterRng rng(CounterRng::derive({seed, rng_stream::frame}));
    DDFrame f;
    f.qam_order = qam_order;
    f.symbols = CMatrix(static_cast<std::size_t>(cfg.n_doppler),
                        static_cast<std::size_t>(cfg.m_delay));
    std::uint64_t ctr = 0;
    for (int k = 0; k < cfg.n_doppler; ++k)
        for (int l = 0; l < cfg.m_delay; ++l) {
            const std::uint64_t idx = rng.bits(ctr++) >> (64 - bits);
            const int re_idx = static_cast<int>(idx % static_cast<std::uint64_t>(side));
            const int im_idx = static_cast<int>(idx / static_cast<std::uint64_t>(side));
            f.symbols(static_cast<std::size_t>(k), static_cast<std::size_t>(l)) =
                scale * Complex{static_cast<double>(2 * re_idx - (side - 1)),
                                static_cast<double>(2 * im_idx - (side - 1))};
        }
    return f;
}

TFGrid isfft(const DDFrame& f) {
    const int n = static_cast<int>(f.symbols.rows());
    const int m = static_cast<int>(f.symbols.cols());
    const CVec wn = twiddle(n), wm = twiddle(m);

    // Separable evaluation of the double sum: inverse DFT over Doppler,
    // then forward DFT over delay.
    CMatrix tmp(static_cast<std::size_t>(n), static_cast<std::size_t>(m));
    for (int nn = 0; nn < n; ++nn)
        for (int l = 0; l < m; ++l) {
            Complex acc = 0.0;
            for (int k = 0; k < n; ++k)
                acc += f.symbols(static_cast<std::size_t>(k), static_cast<std::size_t>(l)) *
                       wn[static_cast<std::size_t>((nn * k) % n)];
            tmp(static_cast<std::size_t>(nn), static_cast<std::size_t>(l)) = acc;
        }
    TFGrid g;
    g.samples = CMatrix(static_cast<std::size_t>(n), static_cast<std::size_t>(m));
    for (int nn = 0; nn < n; ++nn)
        for (int mm = 0; mm < m; ++mm) {
            Complex acc = 0.0;
            for (int l = 0; l < m; ++l)
                acc += tmp(static_cast<std::size_t>(nn), static_cast<std::size_t>(l)) *
                       std::conj(wm[static_cast<std::size_t>((mm * l) % m)]);
            g.samples(static_cast<std::size_t>(nn), static_cast<std::size_t>(mm)) = acc;
        }
    return g;
}

DDFrame sfft(const TFGrid& g) {
    const int n = static_cast<int>(g.samples.rows());
    const int m = static_cast<int>(g.samples.cols());
    const CVec wn = twiddle(n), wm = twiddle(m);

    CMatrix tmp(static_cast<std::size_t>(n), static_cast<std::size_t>(m)); // indexed (k, m)
    for (int k = 0; k < n; ++k)
        for (int mm = 0; mm < m; ++mm) {
            Complex acc = 0.0;
            for (int nn = 0; nn < n; ++nn)
                acc += g.samples(static_cast<std::size_t>(nn), static_cast<std::size_t>(mm)) *
                       std::conj(wn[static_cast<std::size_t>((nn * k) % n)]);
            tmp(static_cast<std::size_t>(k), static_cast<std::size_t>(mm)) = acc;
        }
    DDFrame f;
    f.qam_order = 0;
    f.symbols = CMatrix(static_cast<std::size_t>(n), static_cast<std::size_t>(m));
    const double norm = 1.0 / (static_cast<double>(n) * static_cast<double>(m));
    for (int k = 0; k < n; ++k)
        for (int l = 0; l < m; ++l) {
            Complex acc = 0.0;
            for (int mm = 0; mm < m; ++mm)
                acc += tmp(static_cast<std::size_t>(k), static_cast<std::size_t>(mm)) *
                       wm[static_cast<std::size_t>((mm * l) % m)];
            f.symbols(static_cast<std::size_t>(k), static_cast<std::size_t>(l)) = norm * acc;
        }
    return f;
}

CVec vectorize(const CMatrix& m) { return {m.data(), m.data() + m.size()}; }

CVec vectorize(const DDFrame& f) { return vectorize(f.symbols); }

CMatrix devectorize(const CVec& v, int n_doppler, int m_delay) {
    const std::size_t want = static_cast<std::size_t>(n_doppler) * static_cast<std::size_t>(m_delay);
    if (v.size() != want)
        throw LengthMismatch("devectorize: got " + std::to_string(v.size()) + " elements, want " +
                             std::to_string(want));
    CMatrix m(static_cast<std::size_t>(n_doppler), static_cast<std::size_t>(m_delay));
    std::copy(v.begin(), v.end(), m.data());
    return m;
}

void save_dd_frame(const DDFrame& f, const std::string& path) {
    save_matrix(f.symbols, path, "OTFS", 0u);
}

DDFrame load_dd_frame(const std::string& path) {
    std::uint32_t flags = 0;
    DDFrame f;
    f.symbols = load_matrix(path, "OTFS", &flags);
    if (flags & 1u) throw IoError("file holds a time-frequency grid, not a DD frame: " + path);
    return f;
}

void save_tf_grid(const TFGrid& g, const std::string& path) {
    save_matrix(g.samples, path, "OTFS", 1u);
}

TFGrid load_tf_grid(const std::string& path) {
    std::uint32_t flags = 0;
    TFGrid g;
    g.samples = load_matrix(path, "OTFS", &flags);
    if (!(flags & 1u)) throw IoError("file holds a DD frame, not a time-frequency grid: " + path);
    return g;
}

} // namespace otfsradar
