#include "qtherm/spectral.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <numeric>

#include "blas.hpp"
#include "qtherm/errors.hpp"
#include "qtherm/io.hpp"

namespace qtherm {

namespace fs = std::filesystem;

namespace {

using detail::gemm;

// Largest number of right-hand columns handled per GEMM call.
constexpr Eigen::Index kColumnChunk = 512;

}  // namespace

SpectralDecomposition diagonalize(Eigen::MatrixXd H) {
    const Eigen::Index n = H.rows();
    if (H.cols() != n) throw NumericError("diagonalize requires a square matrix");
    if (!H.allFinite()) throw NumericError("Hamiltonian contains non-finite entries");
    SpectralDecomposition d;
    d.energies.resize(n);
    if (n == 0) return d;
    const int info = detail::syevd(static_cast<int>(n), H.data(), d.energies.data());
    if (info != 0)
        throw NumericError("symmetric eigensolver failed (info=" + std::to_string(info) + ")", info);
    // The solver already returns ascending order; a stable pass makes ties
    // deterministic by original column index.
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    const bool sorted = std::is_sorted(d.energies.data(), d.energies.data() + n);
    if (!sorted) {
        std::stable_sort(order.begin(), order.end(),
                         [&](Eigen::Index a, Eigen::Index b) { return d.energies[a] < d.energies[b]; });
        Eigen::VectorXd e(n);
        Eigen::MatrixXd v(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            e[i] = d.energies[order[static_cast<std::size_t>(i)]];
            v.col(i) = H.col(order[static_cast<std::size_t>(i)]);
        }
        d.energies = std::move(e);
        d.vectors = std::move(v);
    } else {
        d.vectors = std::move(H);
    }
    return d;
}

PureState propagate(const PureState& state0, const SpectralDecomposition& decomp, double t) {
    if (t == 0.0) return state0;
    PureState out;
    out.t = state0.t + t;
    out.amplitudes = propagate_many(state0, decomp, {t}).col(0);
    return out;
}

Eigen::MatrixXcd propagate_many(const PureState& state0, const SpectralDecomposition& decomp,
                                const std::vector<double>& times) {
    return propagate_batch({state0}, decomp, {times});
}

Eigen::MatrixXcd propagate_batch(const std::vector<PureState>& states, const SpectralDecomposition& decomp,
                                 const std::vector<std::vector<double>>& times) {
    if (states.size() != times.size()) throw ConfigError("propagate_batch: one time list per state required");
    const Eigen::Index n = decomp.size();
    const int ni = static_cast<int>(n);
    const auto m = static_cast<Eigen::Index>(states.size());
    Eigen::Index total = 0;
    for (const auto& ts : times) total += static_cast<Eigen::Index>(ts.size());
    Eigen::MatrixXcd out(n, total);
    if (n == 0 || total == 0) return out;

    // Overlaps a = V^T c0, real and imaginary parts as separate columns.
    Eigen::MatrixXd c0(n, 2 * m);
    for (Eigen::Index j = 0; j < m; ++j) {
        const auto& amp = states[static_cast<std::size_t>(j)].amplitudes;
        if (amp.size() != n) throw ConfigError("state dimension does not match the decomposition");
        c0.col(2 * j) = amp.real();
        c0.col(2 * j + 1) = amp.imag();
    }
    Eigen::MatrixXd a(n, 2 * m);
    gemm(true, decomp.vectors.data(), ni, c0.data(), static_cast<int>(2 * m), a.data());

    // Column list of (state index, time).
    std::vector<std::pair<Eigen::Index, double>> cols;
    cols.reserve(static_cast<std::size_t>(total));
    for (Eigen::Index j = 0; j < m; ++j)
        for (double t : times[static_cast<std::size_t>(j)]) cols.emplace_back(j, t);

    for (Eigen::Index start = 0; start < total; start += kColumnChunk) {
        const Eigen::Index w = std::min(kColumnChunk, total - start);
        Eigen::MatrixXd b(n, 2 * w);  // [re block | im block]
        for (Eigen::Index q = 0; q < w; ++q) {
            const auto [j, t] = cols[static_cast<std::size_t>(start + q)];
            for (Eigen::Index x = 0; x < n; ++x) {
                const double ph = -decomp.energies[x] * t;
                const double cr = std::cos(ph), ci = std::sin(ph);
                const double ar = a(x, 2 * j), ai = a(x, 2 * j + 1);
                b(x, q) = ar * cr - ai * ci;
                b(x, w + q) = ar * ci + ai * cr;
            }
        }
        Eigen::MatrixXd c(n, 2 * w);
        gemm(false, decomp.vectors.data(), ni, b.data(), static_cast<int>(2 * w), c.data());
        for (Eigen::Index q = 0; q < w; ++q) {
            out.col(start + q).real() = c.col(q);
            out.col(start + q).imag() = c.col(w + q);
        }
    }
    return out;
}

double energy_expectation(const PureState& state, const SpectralDecomposition& decomp) {
    const Eigen::VectorXd ar = decomp.vectors.transpose() * state.amplitudes.real();
    const Eigen::VectorXd ai = decomp.vectors.transpose() * state.amplitudes.imag();
    return (ar.cwiseAbs2() + ai.cwiseAbs2()).dot(decomp.energies);
}

double equilibration_time(const ModelSpec& spec, double factor) {
    const double spread = derive(spec).spreading;
    if (!(spread > 0)) throw ConfigError("equilibration time is undefined for zero coupling");
    return factor / spread;
}

std::vector<std::pair<double, double>> eigenstate_envelope(const SpectralDecomposition& decomp,
                                                           const ZeroOrderBasis& basis, Eigen::Index xi) {
    if (xi < 0 || xi >= decomp.size()) throw LookupError("eigenstate index out of range");
    std::vector<std::pair<double, double>> out;
    out.reserve(basis.size());
    for (std::size_t i = 0; i < basis.size(); ++i) {
        const double c = decomp.vectors(static_cast<Eigen::Index>(i), xi);
        out.emplace_back(basis.entries[i].energy, c * c);
    }
    return out;
}

// --- cache ------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'Q', 'T', 'H', 'S', 'P', 'E', 'C', '1'};

std::uint64_t to_le(std::uint64_t x) {
    if constexpr (std::endian::native == std::endian::little) return x;
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r = (r << 8) | ((x >> (8 * i)) & 0xff);
    return r;
}

void put_u64(std::ostream& out, std::uint64_t x) {
    x = to_le(x);
    out.write(reinterpret_cast<const char*>(&x), 8);
}

std::uint64_t get_u64(std::istream& in) {
    std::uint64_t x = 0;
    in.read(reinterpret_cast<char*>(&x), 8);
    return to_le(x);
}

// Writes doubles as little-endian and folds them into a running checksum.
void put_doubles(std::ostream& out, const double* p, std::size_t count, std::uint64_t& checksum) {
    constexpr std::size_t chunk = 1 << 16;
    std::vector<std::uint64_t> buf;
    for (std::size_t off = 0; off < count; off += chunk) {
        const std::size_t w = std::min(chunk, count - off);
        buf.resize(w);
        std::memcpy(buf.data(), p + off, w * 8);
        for (auto& v : buf) v = to_le(v);
        checksum = fnv1a64(buf.data(), w * 8, checksum);
        out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(w * 8));
    }
}

void get_doubles(std::istream& in, double* p, std::size_t count, std::uint64_t& checksum) {
    constexpr std::size_t chunk = 1 << 16;
    std::vector<std::uint64_t> buf;
    for (std::size_t off = 0; off < count; off += chunk) {
        const std::size_t w = std::min(chunk, count - off);
        buf.resize(w);
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(w * 8));
        if (!in) throw IntegrityError("spectral cache is truncated");
        checksum = fnv1a64(buf.data(), w * 8, checksum);
        for (auto& v : buf) v = to_le(v);
        std::memcpy(p + off, buf.data(), w * 8);
    }
}

}  // namespace

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t h) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t spec_hash(const ModelSpec& spec) {
    ModelSpec canonical = spec;
    canonical.half_width = spec.resolved_half_width();
    nlohmann::json j = canonical;
    return fnv1a64("qtherm-spectral-v1:" + j.dump());
}

void save_spectral_cache(const fs::path& path, const SpectralDecomposition& decomp, std::uint64_t hash) {
    write_atomic(path, [&](std::ostream& out) {
        const auto n = static_cast<std::uint64_t>(decomp.size());
        out.write(kMagic, sizeof kMagic);
        put_u64(out, n);
        put_u64(out, hash);
        std::uint64_t checksum = 0xcbf29ce484222325ULL;
        put_doubles(out, decomp.energies.data(), n, checksum);
        put_doubles(out, decomp.vectors.data(), n * n, checksum);
        put_u64(out, checksum);
    });
}

SpectralDecomposition load_spectral_cache(const fs::path& path, std::uint64_t expected_hash) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IntegrityError("cannot open spectral cache " + path.string());
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0) throw IntegrityError("bad spectral cache header in " + path.string());
    const std::uint64_t n = get_u64(in);
    const std::uint64_t hash = get_u64(in);
    if (!in) throw IntegrityError("spectral cache header is truncated");
    if (hash != expected_hash) throw IntegrityError("spectral cache hash mismatch in " + path.string());
    std::error_code ec;
    const auto file_size = fs::file_size(path, ec);
    if (ec || file_size != 8 + 16 + 8 * (n + n * n) + 8)
        throw IntegrityError("spectral cache size does not match its header");
    SpectralDecomposition d;
    const auto en = static_cast<Eigen::Index>(n);
    d.energies.resize(en);
    d.vectors.resize(en, en);
    std::uint64_t checksum = 0xcbf29ce484222325ULL;
    get_doubles(in, d.energies.data(), n, checksum);
    get_doubles(in, d.vectors.data(), n * n, checksum);
    const std::uint64_t stored = get_u64(in);
    if (!in || stored != checksum) throw IntegrityError("spectral cache checksum mismatch in " + path.string());
    return d;
}

std::optional<fs::path> cache_directory() {
    const char* dir = std::getenv("QTHERM_CACHE_DIR");
    if (dir == nullptr || *dir == '\0') return std::nullopt;
    return fs::path(dir);
}

fs::path cache_path(const fs::path& dir, std::uint64_t hash) { return dir / ("spectral-" + hex64(hash) + ".bin"); }

SpectralDecomposition solve(Model& model) {
    const auto dir = cache_directory();
    if (!dir) return diagonalize(std::move(model.hamiltonian));
    const std::uint64_t hash = spec_hash(model.spec);
    const fs::path path = cache_path(*dir, hash);
    if (fs::exists(path)) {
        auto d = load_spectral_cache(path, hash);
        if (d.size() != model.hamiltonian.rows())
            throw IntegrityError("spectral cache dimension does not match the model");
        model.hamiltonian.resize(0, 0);
        return d;
    }
    auto d = diagonalize(std::move(model.hamiltonian));
    save_spectral_cache(path, d, hash);
    return d;
}

}  // namespace qtherm
