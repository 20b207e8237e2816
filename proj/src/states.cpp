#include "qtherm/states.hpp"

#include <cmath>
#include <numbers>

#include "qtherm/errors.hpp"
#include "qtherm/io.hpp"
#include "qtherm/rng.hpp"

namespace qtherm {

double LorentzianWindow::operator()(double energy) const {
    const double d = energy - center;
    return (gamma / rho) / (std::numbers::pi * (d * d + gamma * gamma));
}

LorentzianState build_lorentzian_state(const ZeroOrderBasis& basis, const ModelSpec& spec, int s,
                                       double center, double gamma, std::uint64_t seed, DeviateKind kind) {
    if (!(gamma > 0)) throw ConfigError("Lorentzian half-width must be > 0");
    if (s < 0 || s >= basis.n_levels) throw LookupError("system level out of range");
    LorentzianState out;
    out.window = {center, gamma, bath_density(center - spec.system_energy(s), spec)};
    out.under_resolved = gamma * out.window.rho < 1.0;
    const auto n = static_cast<Eigen::Index>(basis.size());
    out.state.amplitudes = Eigen::VectorXcd::Zero(n);
    Rng rng(seed);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& e = basis.entries[static_cast<std::size_t>(i)];
        if (e.s != s) continue;
        const std::complex<double> g =
            kind == DeviateKind::complex ? rng.complex_normal() : std::complex<double>(rng.normal(), 0.0);
        out.state.amplitudes[i] = g * std::sqrt(out.window(e.energy));
    }
    const double norm = out.state.amplitudes.norm();
    if (!(norm > 0)) throw NumericError("Lorentzian state has zero norm");
    out.state.amplitudes /= norm;
    return out;
}

PureState build_basis_state(const ZeroOrderBasis& basis, int s, std::int64_t eps) {
    return basis_state_at(basis, basis.index_of(s, eps));
}

PureState basis_state_at(const ZeroOrderBasis& basis, std::size_t index) {
    if (index >= basis.size()) throw LookupError("basis index out of range");
    PureState st;
    st.amplitudes = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(basis.size()));
    st.amplitudes[static_cast<Eigen::Index>(index)] = 1.0;
    return st;
}

std::string state_csv(const PureState& state, const ZeroOrderBasis& basis) {
    CsvTable t({"s", "eps", "E_zero", "re", "im"});
    for (std::size_t i = 0; i < basis.size(); ++i) {
        const auto& e = basis.entries[i];
        const auto c = state.amplitudes[static_cast<Eigen::Index>(i)];
        t.row({std::to_string(e.s), std::to_string(e.eps), format_number(e.energy), format_number(c.real()),
               format_number(c.imag())});
    }
    return t.str();
}

}  // namespace qtherm
