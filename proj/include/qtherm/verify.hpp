#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qtherm/experiment.hpp"

namespace qtherm {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    /// One-line human summary with measured vs expected values.
    std::string summary;
    nlohmann::json details;
    double seconds = 0;
};

struct VerifyOptions {
    /// Master seed applied to every preset model.
    std::uint64_t seed = 1;
    std::size_t jobs = 1;
    /// Criterion ids to run; empty runs 1 through 9.
    std::vector<int> only;
    /// Called as each criterion finishes.
    std::function<void(const CriterionResult&)> on_result;
};

struct VerifyReport {
    std::vector<CriterionResult> criteria;
    bool pass = false;
    nlohmann::json to_json() const;
};

VerifyReport verify(const VerifyOptions& options = {});

/// Pooled coefficient statistics on a rescaled energy axis x = (E - E_c) / w,
/// y = |c|^2 * rho_f * w, where each state contributes with its own center
/// E_c and predicted width w.
struct PooledStatistics {
    std::size_t states = 0;
    std::size_t samples = 0;
    LorentzianFit fit;  // on the rescaled axis; gamma is the width ratio
    BinnedProfile profile;
    /// Quartile profile of |c|^2 divided by the fitted Lorentzian at each
    /// sample, in bins one width wide; expected quartiles are the bin mean
    /// times the chi-squared quartiles.
    BinnedProfile normalized;
    std::vector<MomentReport> moments;  // one (real) or two (re, im)
    double worst_quartile_error = 0;    // max relative deviation over checked bins
    std::size_t quartile_bins = 0;
    bool pass_moments = false;
    bool pass_quartiles = false;
};

/// Eigenvectors with |E_xi - E0| < W/2 against the width pi k^2 rho_f.
PooledStatistics eigenstate_statistics(const Simulation& sim);
/// The `n_states` level-0 basis states closest to E0, evolved to t_eq,
/// against the width 2 pi k^2 rho_f.
PooledStatistics evolved_statistics(const Simulation& sim, std::size_t n_states = 400);

/// Monte-Carlo estimate of <|g|^2 ln |g|^2> for unit complex Gaussians.
double g0_monte_carlo(std::uint64_t seed, std::size_t draws);

}  // namespace qtherm
