#include <doctest.h>

#include <cmath>
#include <complex>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "qtherm/errors.hpp"
#include "qtherm/io.hpp"
#include "qtherm/rng.hpp"
#include "qtherm/spectral.hpp"

using namespace qtherm;
using doctest::Approx;
namespace fs = std::filesystem;

namespace {

Eigen::MatrixXd random_symmetric(int n, double offdiag, std::uint64_t seed) {
    Rng r(seed);
    Eigen::MatrixXd H(n, n);
    for (int i = 0; i < n; ++i) {
        H(i, i) = r.uniform();
        for (int j = i + 1; j < n; ++j) H(i, j) = H(j, i) = offdiag * r.normal();
    }
    return H;
}

// exp(-i H t) v by its Taylor series.
Eigen::VectorXcd taylor_propagate(const Eigen::MatrixXd& H, const Eigen::VectorXcd& v, double t) {
    Eigen::VectorXcd term = v, sum = v;
    const std::complex<double> f(0, -t);
    for (int k = 1; k < 200 && term.norm() > 1e-20; ++k) {
        term = (f / static_cast<double>(k)) * (H * term);
        sum += term;
    }
    return sum;
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("qtherm-unit-" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("diagonal matrix") {
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(4, 4);
    H.diagonal() << 3.0, -1.0, 2.0, 0.5;
    const auto d = diagonalize(H);
    CHECK(d.energies[0] == -1.0);
    CHECK(d.energies[1] == 0.5);
    CHECK(d.energies[2] == 2.0);
    CHECK(d.energies[3] == 3.0);
    // Each eigenvector is a signed unit vector.
    CHECK(d.vectors.cwiseAbs().colwise().sum().isOnes());
    CHECK(std::abs(d.vectors(1, 0)) == 1.0);
}

TEST_CASE("2x2 against the quadratic formula") {
    for (double k : {1e-3, 0.1, 0.7, 3.0}) {
        Eigen::MatrixXd H(2, 2);
        H << 0, k, k, 1;
        const auto d = diagonalize(H);
        const double r = std::sqrt(1 + 4 * k * k);
        CHECK(d.energies[0] == Approx((1 - r) / 2).epsilon(1e-13));
        CHECK(d.energies[1] == Approx((1 + r) / 2).epsilon(1e-13));
    }
}

TEST_CASE("reconstruction and orthonormality at N = 300") {
    const Eigen::MatrixXd H = random_symmetric(300, 0.05, 8);
    const auto d = diagonalize(H);
    const Eigen::MatrixXd R = d.vectors * d.energies.asDiagonal() * d.vectors.transpose();
    CHECK((R - H).norm() <= 1e-8 * H.norm());
    CHECK((d.vectors.transpose() * d.vectors - Eigen::MatrixXd::Identity(300, 300)).norm() < 1e-10);
    for (Eigen::Index i = 1; i < d.size(); ++i) CHECK(d.energies[i - 1] <= d.energies[i]);
}

TEST_CASE("non-finite input is a numeric error") {
    Eigen::MatrixXd H = Eigen::MatrixXd::Identity(3, 3);
    H(1, 2) = H(2, 1) = NAN;
    CHECK_THROWS_AS(diagonalize(H), NumericError);
    CHECK_THROWS_AS(diagonalize(Eigen::MatrixXd::Zero(2, 3)), NumericError);
}

TEST_CASE("propagation matches the Taylor series") {
    const Eigen::MatrixXd H = random_symmetric(300, 0.02, 9);
    const auto d = diagonalize(H);
    Rng r(10);
    PureState s;
    s.amplitudes.resize(300);
    for (auto& a : s.amplitudes) a = r.complex_normal();
    s.amplitudes.normalize();
    for (double t : {0.1, 0.5, 1.5}) {
        const Eigen::VectorXcd ref = taylor_propagate(H, s.amplitudes, t);
        CHECK((propagate(s, d, t).amplitudes - ref).cwiseAbs().maxCoeff() <= 1e-8);
    }
    const auto many = propagate_many(s, d, {0.1, 0.5, 1.5});
    CHECK((many.col(2) - taylor_propagate(H, s.amplitudes, 1.5)).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("propagation edge cases") {
    const Eigen::MatrixXd H = random_symmetric(120, 0.05, 12);
    const auto d = diagonalize(H);
    PureState s;
    s.amplitudes = Eigen::VectorXcd::Zero(120);
    s.amplitudes[3] = {0.6, 0.8};
    CHECK(propagate(s, d, 0.0).amplitudes == s.amplitudes);

    // An eigenvector only picks up a phase.
    PureState e;
    e.amplitudes = d.vectors.col(40).cast<std::complex<double>>();
    const auto et = propagate(e, d, 17.3);
    CHECK((et.amplitudes.cwiseAbs2() - e.amplitudes.cwiseAbs2()).cwiseAbs().maxCoeff() < 1e-12);
    const std::complex<double> phase = std::polar(1.0, -d.energies[40] * 17.3);
    CHECK((et.amplitudes - phase * e.amplitudes).norm() < 1e-10);
    CHECK(energy_expectation(e, d) == Approx(d.energies[40]).epsilon(1e-12));

    // Batches agree with single propagation.
    const auto batch = propagate_batch({s, e}, d, {{1.0, 2.0}, {3.0}});
    REQUIRE(batch.cols() == 3);
    CHECK((batch.col(1) - propagate(s, d, 2.0).amplitudes).norm() < 1e-13);
    CHECK((batch.col(2) - propagate(e, d, 3.0).amplitudes).norm() < 1e-13);
}

TEST_CASE("equilibration time") {
    ModelSpec s;
    s.bath_prefactor = 31;
    s.center_energy = 10;
    s.half_width = 5;
    s.coupling = 0.0045;
    const double t1 = equilibration_time(s);
    CHECK(t1 * derive(s).spreading == Approx(10.0));
    s.coupling *= 2;
    CHECK(equilibration_time(s) == Approx(t1 / 4));
    // A spreading width of 0.05 gives t_eq = 200.
    s.coupling = std::sqrt(0.05 / (2 * M_PI * total_density(10, s)));
    CHECK(equilibration_time(s) == Approx(200.0));
    s.coupling = 0;
    CHECK_THROWS_AS(equilibration_time(s), ConfigError);
}

TEST_CASE("eigenstate envelope") {
    ModelSpec s;
    s.bath_prefactor = 7.75;
    s.coupling = 0;
    s.center_energy = 10;
    s.half_width = 1.0;
    Model m = build_hamiltonian(s);
    const auto basis = m.basis;
    const auto d = diagonalize(m.hamiltonian);
    const auto env = eigenstate_envelope(d, basis, 5);
    int nonzero = 0;
    for (const auto& [e, w] : env)
        if (w != 0) {
            ++nonzero;
            CHECK(w == 1.0);
            CHECK(e == d.energies[5]);
        }
    CHECK(nonzero == 1);
    CHECK_THROWS_AS(eigenstate_envelope(d, basis, -1), LookupError);

    s.coupling = 0.009;
    Model c = build_hamiltonian(s);
    const auto dc = diagonalize(c.hamiltonian);
    double total = 0;
    for (const auto& [e, w] : eigenstate_envelope(dc, c.basis, 30)) total += w;
    CHECK(total == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("spectral cache round trip and corruption") {
    const auto dir = scratch("cache");
    const Eigen::MatrixXd H = random_symmetric(50, 0.1, 13);
    const auto d = diagonalize(H);
    const fs::path file = cache_path(dir, 0x1234);
    save_spectral_cache(file, d, 0x1234);
    const auto back = load_spectral_cache(file, 0x1234);
    CHECK(back.energies == d.energies);
    CHECK(back.vectors == d.vectors);
    CHECK_THROWS_AS(load_spectral_cache(file, 0x1235), IntegrityError);

    std::string bytes = read_text(file);
    bytes[bytes.size() / 2] ^= 0x01;
    write_atomic(file, bytes);
    CHECK_THROWS_AS(load_spectral_cache(file, 0x1234), IntegrityError);
    write_atomic(file, bytes.substr(0, 100));
    CHECK_THROWS_AS(load_spectral_cache(file, 0x1234), IntegrityError);
    write_atomic(file, "not a cache");
    CHECK_THROWS_AS(load_spectral_cache(file, 0x1234), IntegrityError);
    CHECK_THROWS_AS(load_spectral_cache(dir / "missing.bin", 0x1234), IntegrityError);
}

TEST_CASE("solve goes through the cache directory") {
    const auto dir = scratch("solve");
    ModelSpec s;
    s.bath_prefactor = 7.75;
    s.coupling = 0.009;
    s.center_energy = 10;
    s.half_width = 1.5;
    setenv("QTHERM_CACHE_DIR", dir.c_str(), 1);
    Model a = build_hamiltonian(s);
    const auto first = solve(a);
    const fs::path file = cache_path(dir, spec_hash(s));
    CHECK(fs::exists(file));
    Model b = build_hamiltonian(s);
    const auto second = solve(b);
    CHECK(second.vectors == first.vectors);

    // A flipped byte is detected on the next load.
    std::string bytes = read_text(file);
    bytes[40] ^= 0x10;
    write_atomic(file, bytes);
    Model c = build_hamiltonian(s);
    CHECK_THROWS_AS(solve(c), IntegrityError);
    unsetenv("QTHERM_CACHE_DIR");
    CHECK_FALSE(cache_directory().has_value());

    ModelSpec other = s;
    other.seed = 2;
    CHECK(spec_hash(other) != spec_hash(s));
}
