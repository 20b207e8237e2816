#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qtherm/model.hpp"
#include "qtherm/spectral.hpp"

namespace qtherm {

/// Equal-width energy bins with the mean and quartiles of the values in each.
struct BinnedProfile {
    double lo = 0, hi = 0, width = 0;
    std::vector<double> centers;
    std::vector<double> mean;
    std::vector<double> q1;
    std::vector<double> median;
    std::vector<double> q3;
    std::vector<std::size_t> count;
    /// All weight fell into a single bin.
    bool degenerate = false;

    std::size_t size() const { return centers.size(); }
    std::size_t populated() const;
};

/// Bins (x, y) pairs over [lo, hi] (default: the range of x).
BinnedProfile bin_profile(const std::vector<double>& x, const std::vector<double>& y, std::size_t n_bins,
                          std::optional<std::pair<double, double>> range = std::nullopt);
BinnedProfile bin_profile(const Eigen::VectorXd& probabilities, const ZeroOrderBasis& basis, std::size_t n_bins);
BinnedProfile bin_profile(const std::vector<std::pair<double, double>>& envelope, std::size_t n_bins);

/// max(25, ceil(span / gamma) * 4).
std::size_t default_bin_count(double span, double gamma);

/// amplitude * (gamma / pi) / ((x - center)^2 + gamma^2)
double lorentzian_profile(double x, double center, double gamma, double amplitude);

struct LorentzianFit {
    double center = 0, gamma = 0, amplitude = 0;
    /// center minus the reference energy given in FitOptions.
    double offset = 0;
    double residual_norm = 0;
    double sigma_center = 0, sigma_gamma = 0, sigma_amplitude = 0;
    std::size_t bins_used = 0;
    int iterations = 0;
    bool converged = false;
};

struct FitOptions {
    int max_iterations = 200;
    double step_tolerance = 1e-10;
    /// Only bins whose centers fall in this range enter the fit.
    std::optional<std::pair<double, double>> range;
    std::size_t min_count = 1;
    double reference = 0.0;
};

/// Levenberg-Marquardt on (center, ln gamma, ln amplitude) minimizing
/// sum_i n_i (mean_i / f_i - 1)^2. Throws FitError when it does not converge
/// and InsufficientDataError when fewer than 5 bins are usable.
LorentzianFit fit_lorentzian(const BinnedProfile& profile, double center0, double gamma0,
                             std::optional<double> amplitude0 = std::nullopt, const FitOptions& options = {});

void to_json(nlohmann::json& j, const LorentzianFit& f);

struct MomentReport {
    std::size_t n = 0;
    double mean = 0, variance = 0, skewness = 0, excess_kurtosis = 0;
    bool pass = false;
};

/// Passes iff |mean| <= 0.1, |var - 1| <= 0.1, |skew| <= 0.2, |kurt| <= 0.5.
/// Throws InsufficientDataError below 500 samples.
MomentReport fluctuation_test(const std::vector<double>& values);
void to_json(nlohmann::json& j, const MomentReport& r);

/// (Q1, Q3) of chi-squared with one degree of freedom, and of chi-squared
/// with two degrees of freedom scaled by one half.
std::array<double, 2> chi2_quartiles(int dof);

struct QuartileOverlay {
    std::vector<double> q1, q3;
};

/// Expected per-bin quartiles: every bin's mean times the chi^2 quartiles.
QuartileOverlay quartile_overlay(const BinnedProfile& profile, int dof);

/// Profile table with columns bin_center, mean, q1, q3, count, expected_mean,
/// expected_q1, expected_q3; `expected` gives the predicted mean at x.
template <class F>
std::string profile_csv(const BinnedProfile& p, int dof, F expected);

std::string profile_csv_impl(const BinnedProfile& p, int dof, const std::vector<double>& expected_mean);

template <class F>
std::string profile_csv(const BinnedProfile& p, int dof, F expected) {
    std::vector<double> e(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) e[i] = expected(p.centers[i]);
    return profile_csv_impl(p, dof, e);
}

}  // namespace qtherm
