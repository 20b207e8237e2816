#include <doctest.h>

#include <cmath>

#include "qtherm/observables.hpp"
#include "qtherm/rng.hpp"

using namespace qtherm;
using doctest::Approx;

namespace {

ModelSpec three_level() {
    ModelSpec s;
    s.temperature = 6.22;
    s.n_levels = 3;
    s.level_spacing = 1.0;
    return s;
}

// W_s product states on each level, all at one energy.
ZeroOrderBasis counted_basis(const std::vector<int>& w) {
    ZeroOrderBasis b;
    b.n_levels = static_cast<int>(w.size());
    for (int s = 0; s < b.n_levels; ++s)
        for (int e = 0; e < w[static_cast<std::size_t>(s)]; ++e) b.entries.push_back({s, e, 10.0});
    return b;
}

}  // namespace

TEST_CASE("Shannon entropy") {
    CHECK(shannon_entropy(std::vector<double>{1.0, 0.0, 0.0}) == 0.0);
    for (int w : {1, 2, 7, 1000}) CHECK(shannon_entropy(std::vector<double>(w, 1.0 / w)) == Approx(std::log(w)));
    CHECK(shannon_entropy(std::vector<double>{0.5, 0.5, 1e-320}) == Approx(std::log(2.0)));
}

TEST_CASE("entropy split of a product distribution") {
    const auto basis = counted_basis({4, 4, 4});
    const std::vector<double> ps = {0.5, 0.3, 0.2}, q = {0.4, 0.3, 0.2, 0.1};
    Eigen::VectorXd p(12);
    for (int s = 0; s < 3; ++s)
        for (int e = 0; e < 4; ++e) p[4 * s + e] = ps[s] * q[e];
    const auto b = split_entropy(p, basis, three_level());
    CHECK(b.S_env == Approx(shannon_entropy(q)));
    CHECK(b.S_sys == Approx(shannon_entropy(ps)));
    CHECK(b.S_univ == Approx(b.S_sys + b.S_env).epsilon(1e-14));
}

TEST_CASE("uniform microcanonical distribution") {
    const std::vector<int> w = {50, 30, 20};
    const auto basis = counted_basis(w);
    const Eigen::VectorXd p = Eigen::VectorXd::Constant(100, 0.01);
    const auto b = split_entropy(p, basis, three_level());
    double env = 0;
    for (int s = 0; s < 3; ++s) env += w[s] / 100.0 * std::log(w[s]);
    CHECK(b.S_env == Approx(env));
    CHECK(b.S_sys == Approx(std::log(100.0) - env));
    CHECK(b.S_univ == Approx(std::log(100.0)));
}

TEST_CASE("empty system levels contribute nothing") {
    const auto basis = counted_basis({3, 3, 3});
    Eigen::VectorXd p = Eigen::VectorXd::Zero(9);
    p.head(3).setConstant(1.0 / 3);
    const auto b = split_entropy(p, basis, three_level());
    CHECK(b.p_s == std::vector<double>{1.0, 0.0, 0.0});
    CHECK(b.S_sys == 0.0);
    CHECK(b.S_env == Approx(std::log(3.0)));
    Eigen::VectorXd single = Eigen::VectorXd::Zero(9);
    single[4] = 1;
    const auto z = split_entropy(single, basis, three_level());
    CHECK(z.S_univ == 0.0);
    CHECK(z.S_sys == 0.0);
    CHECK(z.S_env == 0.0);
}

TEST_CASE("split identity on random states") {
    const auto basis = counted_basis({40, 25, 16});
    Rng r(4);
    for (int k = 0; k < 50; ++k) {
        Eigen::VectorXd p(81);
        for (auto& x : p) x = std::norm(r.complex_normal()) * (r.uniform() < 0.3 ? 0.0 : 1.0);
        if (p.sum() == 0) p[0] = 1;
        p /= p.sum();
        const auto b = split_entropy(p, basis, three_level());
        CHECK(b.S_univ == Approx(b.S_sys + b.S_env).epsilon(1e-13));
    }
}

TEST_CASE("Boltzmann distribution, free energy and heat") {
    const ModelSpec s = three_level();
    const auto pb = boltzmann_distribution(s);
    CHECK(pb[0] == Approx(0.3881).epsilon(1e-3));
    CHECK(pb[1] == Approx(0.3305).epsilon(1e-3));
    CHECK(pb[2] == Approx(0.2814).epsilon(1e-3));
    CHECK(free_energy({1.0, 0.0, 0.0}, s) == 0.0);
    const double z = 1 + std::exp(-1 / 6.22) + std::exp(-2 / 6.22);
    CHECK(free_energy(pb, s) == Approx(-6.22 * std::log(z)).epsilon(1e-12));
    CHECK(free_energy(pb, s) == Approx(-5.886).epsilon(1e-3));

    EntropyBreakdown a, b;
    a.p_s = {1, 0, 0};
    a.mean_E_sys = 0;
    b.p_s = pb;
    b.mean_E_sys = pb[1] + 2 * pb[2];
    CHECK(heat(a, b) == Approx(-0.8932).epsilon(1e-3));
    CHECK(heat(a, a) == 0.0);
    a.F_sys = free_energy(a.p_s, s);
    CHECK(excess_entropy(a, a, s.temperature) == 0.0);
}

TEST_CASE("total variation") {
    CHECK(total_variation({1, 0, 0}, {0, 1, 0}) == 1.0);
    CHECK(total_variation({0.5, 0.5}, {0.5, 0.5}) == 0.0);
    CHECK(total_variation({0.4, 0.6}, {0.5, 0.5}) == Approx(0.1));
}
