#include "qtherm/observables.hpp"

#include <cmath>

#include "qtherm/errors.hpp"

namespace qtherm {

double shannon_entropy(const double* p, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if (p[i] >= kProbabilityFloor) s -= p[i] * std::log(p[i]);
    return s;
}

double shannon_entropy(const Eigen::VectorXd& p) { return shannon_entropy(p.data(), static_cast<std::size_t>(p.size())); }
double shannon_entropy(const std::vector<double>& p) { return shannon_entropy(p.data(), p.size()); }

double entropy_univ(const PureState& state) { return shannon_entropy(state.probabilities()); }

std::vector<double> system_distribution(const Eigen::VectorXd& p, const ZeroOrderBasis& basis) {
    if (static_cast<std::size_t>(p.size()) != basis.size()) throw ConfigError("state does not match the basis");
    std::vector<double> ps(static_cast<std::size_t>(basis.n_levels), 0.0);
    for (std::size_t i = 0; i < basis.size(); ++i) ps[static_cast<std::size_t>(basis.entries[i].s)] += p[static_cast<Eigen::Index>(i)];
    return ps;
}

std::vector<double> system_distribution(const PureState& state, const ZeroOrderBasis& basis) {
    return system_distribution(state.probabilities(), basis);
}

EntropyBreakdown split_entropy(const Eigen::VectorXd& p, const ZeroOrderBasis& basis, const ModelSpec& spec,
                               double t) {
    EntropyBreakdown b;
    b.t = t;
    b.S_univ = shannon_entropy(p);
    b.p_s = system_distribution(p, basis);
    b.S_sys = shannon_entropy(b.p_s);
    // Conditional entropies: -sum_eps (p/p_s) ln(p/p_s), weighted by p_s.
    std::vector<double> cond(b.p_s.size(), 0.0);
    for (std::size_t i = 0; i < basis.size(); ++i) {
        const double pi = p[static_cast<Eigen::Index>(i)];
        const auto s = static_cast<std::size_t>(basis.entries[i].s);
        if (pi < kProbabilityFloor || b.p_s[s] < kProbabilityFloor) continue;
        const double q = pi / b.p_s[s];
        cond[s] -= q * std::log(q);
    }
    for (std::size_t s = 0; s < cond.size(); ++s)
        if (b.p_s[s] >= kProbabilityFloor) b.S_env += b.p_s[s] * cond[s];
    b.mean_E_sys = 0.0;
    for (std::size_t s = 0; s < b.p_s.size(); ++s) b.mean_E_sys += b.p_s[s] * spec.system_energy(static_cast<int>(s));
    b.F_sys = b.mean_E_sys - spec.temperature * b.S_sys;
    return b;
}

EntropyBreakdown split_entropy(const PureState& state, const ZeroOrderBasis& basis, const ModelSpec& spec) {
    return split_entropy(state.probabilities(), basis, spec, state.t);
}

double free_energy(const std::vector<double>& p_s, const ModelSpec& spec) {
    double e = 0.0;
    for (std::size_t s = 0; s < p_s.size(); ++s) e += p_s[s] * spec.system_energy(static_cast<int>(s));
    return e - spec.temperature * shannon_entropy(p_s);
}

double heat(const EntropyBreakdown& initial, const EntropyBreakdown& final_) {
    return initial.mean_E_sys - final_.mean_E_sys;
}

double excess_entropy(const EntropyBreakdown& initial, const EntropyBreakdown& final_, double temperature) {
    return (final_.S_univ - initial.S_univ) + (final_.F_sys - initial.F_sys) / temperature;
}

std::vector<double> boltzmann_distribution(const ModelSpec& spec) {
    std::vector<double> p(static_cast<std::size_t>(spec.n_levels));
    double z = 0.0;
    for (int s = 0; s < spec.n_levels; ++s) z += p[static_cast<std::size_t>(s)] = std::exp(-spec.system_energy(s) / spec.temperature);
    for (auto& x : p) x /= z;
    return p;
}

double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
    if (p.size() != q.size()) throw ConfigError("distributions differ in length");
    double d = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) d += std::abs(p[i] - q[i]);
    return 0.5 * d;
}

}  // namespace qtherm
