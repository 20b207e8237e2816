#pragma once

#include <vector>

#include <Eigen/Dense>

#include "qtherm/model.hpp"
#include "qtherm/spectral.hpp"

namespace qtherm {

/// Probabilities smaller than this count as exactly zero.
inline constexpr double kProbabilityFloor = 1e-300;

/// Entropy bookkeeping for one state. All entropies in nats.
struct EntropyBreakdown {
    double t = 0.0;
    double S_univ = 0.0;
    double S_sys = 0.0;
    double S_env = 0.0;  // sum_s p_s * (entropy of eps given s)
    std::vector<double> p_s;
    double mean_E_sys = 0.0;
    double F_sys = 0.0;
};

/// -sum p ln p with 0 ln 0 = 0.
double shannon_entropy(const double* p, std::size_t n);
double shannon_entropy(const Eigen::VectorXd& p);
double shannon_entropy(const std::vector<double>& p);

double entropy_univ(const PureState& state);

std::vector<double> system_distribution(const Eigen::VectorXd& p, const ZeroOrderBasis& basis);
std::vector<double> system_distribution(const PureState& state, const ZeroOrderBasis& basis);

/// p_s = sum_eps p_{s,eps}; S_env uses the conditionals p_{s,eps} / p_s. A
/// level with p_s = 0 contributes nothing to S_env.
EntropyBreakdown split_entropy(const Eigen::VectorXd& p, const ZeroOrderBasis& basis, const ModelSpec& spec,
                               double t = 0.0);
EntropyBreakdown split_entropy(const PureState& state, const ZeroOrderBasis& basis, const ModelSpec& spec);

/// <E_S> - T * S_S, with S_S the Shannon entropy of p_s.
double free_energy(const std::vector<double>& p_s, const ModelSpec& spec);

/// Q = <E_S>_initial - <E_S>_final, so a system absorbing energy gives Q < 0.
double heat(const EntropyBreakdown& initial, const EntropyBreakdown& final_);

/// (S_univ,f - S_univ,0) + (F_f - F_0) / T.
double excess_entropy(const EntropyBreakdown& initial, const EntropyBreakdown& final_, double temperature);

std::vector<double> boltzmann_distribution(const ModelSpec& spec);
double total_variation(const std::vector<double>& p, const std::vector<double>& q);

}  // namespace qtherm
