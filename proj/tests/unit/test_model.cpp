#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "qtherm/errors.hpp"
#include "qtherm/model.hpp"

using namespace qtherm;
using doctest::Approx;

namespace {

ModelSpec small_spec() {
    ModelSpec s;
    s.bath_prefactor = 7.75;
    s.coupling = 0.009;
    s.center_energy = 10.0;
    s.half_width = 3.0;
    return s;
}

}  // namespace

TEST_CASE("bath density") {
    ModelSpec s;  // A = 1415.3, T = 6.22
    CHECK(bath_density(0.0, s) == Approx(1415.3).epsilon(1e-12));
    CHECK(bath_density(s.temperature * std::log(2.0), s) == Approx(2 * 1415.3).epsilon(1e-12));
    CHECK(bath_density(6.22, s) == Approx(3847.2).epsilon(1e-4));
}

TEST_CASE("total density sums the system levels") {
    ModelSpec s;
    const double e = s.temperature * std::log(1e6 / s.bath_prefactor);
    CHECK(bath_density(e, s) == Approx(1e6).epsilon(1e-12));
    CHECK(total_density(e, s) == Approx(2.5765e6).epsilon(1e-4));
    for (double E : {2.0, 10.0, 40.0, 90.0}) CHECK(total_density(E, s) / bath_density(E, s) == Approx(2.5765).epsilon(1e-4));
    ModelSpec one = s;
    one.n_levels = 1;
    CHECK(total_density(17.0, one) == bath_density(17.0, one));
    CHECK_THROWS_AS(total_density(1.5, s), ConfigError);
}

TEST_CASE("bath level count") {
    ModelSpec s;
    // A T e^{40/T} (e^{1/T} - 1) levels in [40, 41] at the reference parameters.
    const double expected = 1415.3 * 6.22 * std::exp(40 / 6.22) * (std::exp(1 / 6.22) - 1);
    CHECK(bath_count(40, 41, s) == Approx(expected).epsilon(1e-12));
    CHECK(bath_count(40, 41, s) == Approx(9.53e5).epsilon(1e-3));
}

TEST_CASE("bath levels follow the integrated density") {
    const ModelSpec s = small_spec();
    const auto levels = build_bath_levels(s);
    REQUIRE(levels.size() > 100);
    CHECK(std::is_sorted(levels.begin(), levels.end()));
    const double lo = s.center_energy - *s.half_width - s.max_system_energy();
    const double hi = s.center_energy + *s.half_width;
    CHECK(levels.front() >= lo);
    CHECK(levels.back() <= hi);
    for (double a = lo; a + 1.0 <= hi; a += 0.7) {
        const double b = a + 1.0;
        const auto n = std::count_if(levels.begin(), levels.end(), [&](double e) { return e >= a && e <= b; });
        CHECK(std::abs(static_cast<double>(n) - bath_count(a, b, s)) <= 1.0);
    }
    // Local spacing is the inverse density.
    const std::size_t mid = levels.size() / 2;
    CHECK(levels[mid + 1] - levels[mid] == Approx(1.0 / bath_density(levels[mid], s)).epsilon(0.01));
}

TEST_CASE("model validation") {
    ModelSpec s = small_spec();
    s.bath_prefactor = 0.5;
    s.n_levels = 1;
    s.half_width = 0.5;
    REQUIRE(bath_count(9.5, 10.5, s) < 10);
    CHECK_THROWS_AS(build_bath_levels(s), ConfigError);
    s = small_spec();
    s.center_energy = 3.0;  // bath window would start below zero
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = small_spec();
    s.temperature = -1;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = small_spec();
    s.n_levels = 0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("default half width scales with the spreading width") {
    ModelSpec s = small_spec();
    s.half_width.reset();
    CHECK(s.resolved_half_width() == 3.0);  // floor
    s.center_energy = 60.0;
    s.bath_prefactor = 1415.3;
    s.coupling = 0.9e-4;
    const double spread = 2 * M_PI * s.coupling * s.coupling * total_density(60.0, s);
    CHECK(s.resolved_half_width() == Approx(std::max(3.0, 50 * spread)));
}

TEST_CASE("basis window, order and lookup") {
    const ModelSpec s = small_spec();
    const auto basis = build_basis(s);
    CHECK(basis.size() == basis_dimension(s));
    for (std::size_t i = 0; i < basis.size(); ++i) {
        const auto& e = basis.entries[i];
        CHECK(e.energy >= s.center_energy - *s.half_width);
        CHECK(e.energy <= s.center_energy + *s.half_width);
        CHECK(e.energy == Approx(s.system_energy(e.s) + basis.bath_levels[static_cast<std::size_t>(e.eps)]));
        if (i > 0) CHECK(basis.entries[i - 1].energy <= e.energy);
        CHECK(basis.index_of(e.s, e.eps) == i);
    }
    CHECK_THROWS_AS(basis.index_of(0, -1), LookupError);
    CHECK_THROWS_AS(basis.index_of(7, 0), LookupError);
    const auto near = basis.nearest(1, 10.0);
    CHECK(basis.entries[near].s == 1);
    // Each level contributes the bath levels of its shifted window.
    double expected = 0;
    for (int l = 0; l < s.n_levels; ++l) expected += bath_count(7.0 - s.system_energy(l), 13.0 - s.system_energy(l), s);
    CHECK(std::abs(static_cast<double>(basis.size()) - expected) <= s.n_levels);
}

TEST_CASE("Hamiltonian construction") {
    ModelSpec s = small_spec();
    const Model m = build_hamiltonian(s);
    const auto n = static_cast<Eigen::Index>(m.basis.size());
    REQUIRE(n >= 200);
    const auto& H = m.hamiltonian;
    CHECK((H - H.transpose()).norm() == 0.0);
    for (Eigen::Index i = 0; i < n; ++i) CHECK(H(i, i) == m.basis.entries[static_cast<std::size_t>(i)].energy);
    // Off-diagonal variance is k^2.
    double sum = 0, sq = 0;
    std::size_t cnt = 0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            sum += H(i, j);
            sq += H(i, j) * H(i, j);
            ++cnt;
        }
    const double mean = sum / cnt;
    CHECK(std::abs(mean) < 5 * s.coupling / std::sqrt(static_cast<double>(cnt)));
    CHECK(sq / cnt - mean * mean == Approx(s.coupling * s.coupling).epsilon(0.05));

    // Same seed, identical matrix; other seed, different matrix.
    CHECK(build_hamiltonian(s).hamiltonian == H);
    s.seed = 2;
    CHECK(build_hamiltonian(s).hamiltonian != H);
    s.coupling = 0;
    const Model d = build_hamiltonian(s);
    CHECK(d.hamiltonian == Eigen::MatrixXd(d.basis.energies().asDiagonal()));
}

TEST_CASE("dimension cap raises a resource error with the dimension") {
    const ModelSpec s = small_spec();
    const std::size_t n = basis_dimension(s);
    try {
        build_hamiltonian(s, n - 1);
        FAIL("expected ResourceError");
    } catch (const ResourceError& e) {
        CHECK(e.dimension() == n);
        CHECK(e.exit_code() == ExitCode::config_error);
    }
}

TEST_CASE("derived quantities") {
    const ModelSpec s = small_spec();
    const auto d = derive(s);
    CHECK(d.dimension == basis_dimension(s));
    CHECK(d.rho0 == Approx(bath_density(10.0, s)));
    CHECK(d.rho_f == Approx(total_density(10.0, s)));
    CHECK(d.spreading == Approx(2 * M_PI * s.coupling * s.coupling * d.rho_f));
    CHECK(d.eigen_width == Approx(d.spreading / 2));
    CHECK(d.t_eq == Approx(10.0 / d.spreading));
    ModelSpec z = s;
    z.coupling = 0;
    CHECK(derive(z).t_eq == 0.0);
}

TEST_CASE("model JSON round trip and strictness") {
    ModelSpec s = small_spec();
    s.seed = 99;
    const nlohmann::json j = s;
    CHECK(parse_model_spec(j) == s);
    ModelSpec u = s;
    u.half_width.reset();
    CHECK(nlohmann::json(u)["half_width"].is_null());
    CHECK(parse_model_spec(nlohmann::json(u)) == u);

    auto bad = j;
    bad["couplng"] = 0.1;
    CHECK_THROWS_AS(parse_model_spec(bad), ConfigError);
    bad = j;
    bad["temperature"] = "hot";
    CHECK_THROWS_AS(parse_model_spec(bad), ConfigError);
    bad = j;
    bad["n_levels"] = 2.5;
    CHECK_THROWS_AS(parse_model_spec(bad), ConfigError);
    CHECK_THROWS_AS(parse_model_spec(nlohmann::json::array()), ConfigError);
}
