#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "qtherm/analytic.hpp"
#include "qtherm/errors.hpp"
#include "qtherm/observables.hpp"
#include "qtherm/states.hpp"
#include "qtherm/stats.hpp"

using namespace qtherm;
using doctest::Approx;

namespace {

// rho0 ~ 100 at E0 = 20 with a window of 30 widths on each side of gamma = 0.5.
ModelSpec wide_spec() {
    ModelSpec s;
    s.bath_prefactor = 100.0 / std::exp(20.0 / 6.22);
    s.center_energy = 20.0;
    s.half_width = 15.0;
    s.coupling = 0.0;
    return s;
}

}  // namespace

TEST_CASE("Lorentzian window") {
    const LorentzianWindow w{1.0, 0.2, 50.0};
    CHECK(w(1.0) == Approx(1.0 / (M_PI * 0.2 * 50.0)));
    CHECK(w(1.2) == Approx(w(1.0) / 2));
}

TEST_CASE("Lorentzian state entropy") {
    // rho0 ~ 1e4 so that the window spans several hundred widths; the
    // closed form assumes untruncated tails.
    ModelSpec spec = wide_spec();
    spec.bath_prefactor = 2004.4;
    spec.center_energy = 10.0;
    spec.half_width = 3.0;
    const auto basis = build_basis(spec);
    const double rho0 = bath_density(spec.center_energy, spec);
    const double gamma = 50.0 / rho0;
    double mean = 0;
    const int seeds = 10;
    double direct = 0;
    for (int i = 0; i < seeds; ++i) {
        const auto ls = build_lorentzian_state(basis, spec, 0, spec.center_energy, gamma, 100 + i);
        CHECK(ls.state.amplitudes.norm() == Approx(1.0).epsilon(1e-14));
        CHECK_FALSE(ls.under_resolved);
        const auto p = ls.state.probabilities();
        for (std::size_t j = 0; j < basis.size(); ++j)
            if (basis.entries[j].s != 0) REQUIRE(p[static_cast<Eigen::Index>(j)] == 0.0);
        mean += shannon_entropy(p) / seeds;
        if (i == 0) {
            // Expected entropy of the truncated window by direct summation:
            // -sum L ln L + g0 sum L, with L normalized over the kept levels.
            double z = 0;
            for (std::size_t j = 0; j < basis.size(); ++j)
                if (basis.entries[j].s == 0) z += ls.window(basis.entries[j].energy);
            for (std::size_t j = 0; j < basis.size(); ++j)
                if (basis.entries[j].s == 0) {
                    const double l = ls.window(basis.entries[j].energy) / z;
                    direct += -l * std::log(l) - analytic::g0 * l;
                }
        }
    }
    CHECK(mean == Approx(direct).epsilon(0.01));
    CHECK(std::abs(mean - (std::log(4 * M_PI * 50) - analytic::g0)) <= 0.1);
}

TEST_CASE("Lorentzian coefficients are exponential about the envelope") {
    const ModelSpec spec = wide_spec();
    const auto basis = build_basis(spec);
    const double gamma = 0.5;
    std::vector<double> ratio;
    for (int i = 0; i < 20; ++i) {
        const auto ls = build_lorentzian_state(basis, spec, 0, spec.center_energy, gamma, 300 + i);
        double z = 0;
        for (std::size_t j = 0; j < basis.size(); ++j)
            if (basis.entries[j].s == 0) z += ls.window(basis.entries[j].energy);
        for (std::size_t j = 0; j < basis.size(); ++j)
            if (basis.entries[j].s == 0)
                ratio.push_back(std::norm(ls.state.amplitudes[static_cast<Eigen::Index>(j)]) * z /
                                ls.window(basis.entries[j].energy));
    }
    std::sort(ratio.begin(), ratio.end());
    const auto q = [&](double f) { return ratio[static_cast<std::size_t>(f * (ratio.size() - 1))]; };
    CHECK(q(0.25) == Approx(0.2877).epsilon(0.03));
    CHECK(q(0.75) == Approx(1.3863).epsilon(0.03));
}

TEST_CASE("real deviates and under-resolved flag") {
    const ModelSpec spec = wide_spec();
    const auto basis = build_basis(spec);
    const auto real = build_lorentzian_state(basis, spec, 1, 20.0, 0.3, 5, DeviateKind::real);
    CHECK(real.state.amplitudes.imag().isZero(0));
    CHECK(real.window.rho == Approx(bath_density(19.0, spec)));
    const auto narrow = build_lorentzian_state(basis, spec, 0, 20.0, 0.5 / 100.0, 5);
    CHECK(narrow.under_resolved);
    CHECK(build_lorentzian_state(basis, spec, 0, 20.0, 0.3, 5).state.amplitudes ==
          build_lorentzian_state(basis, spec, 0, 20.0, 0.3, 5).state.amplitudes);
}

TEST_CASE("basis states") {
    ModelSpec spec = wide_spec();
    spec.coupling = 0.01;
    spec.half_width = 1.0;
    const Model m = build_hamiltonian(spec);
    const std::size_t i = m.basis.nearest(2, 20.0);
    const auto& e = m.basis.entries[i];
    const PureState b = build_basis_state(m.basis, e.s, e.eps);
    CHECK(b.amplitudes.norm() == 1.0);
    CHECK(entropy_univ(b) == 0.0);
    const double energy = (b.amplitudes.adjoint() * m.hamiltonian * b.amplitudes)(0).real();
    CHECK(energy == e.energy);
    CHECK_THROWS_AS(build_basis_state(m.basis, 0, 1'000'000'000), LookupError);
    CHECK_THROWS_AS(basis_state_at(m.basis, m.basis.size()), LookupError);
    const auto csv = state_csv(b, m.basis);
    CHECK(csv.rfind("s,eps,E_zero,re,im\n", 0) == 0);
}
