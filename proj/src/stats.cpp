#include "qtherm/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qtherm/errors.hpp"
#include "qtherm/io.hpp"

namespace qtherm {

namespace {

// Linear-interpolation quantile of sorted data.
double quantile(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return 0.0;
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto i = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(i);
    if (i + 1 >= sorted.size()) return sorted.back();
    return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

}  // namespace

std::size_t BinnedProfile::populated() const {
    return static_cast<std::size_t>(std::count_if(count.begin(), count.end(), [](std::size_t c) { return c > 0; }));
}

BinnedProfile bin_profile(const std::vector<double>& x, const std::vector<double>& y, std::size_t n_bins,
                          std::optional<std::pair<double, double>> range) {
    if (x.size() != y.size()) throw ConfigError("bin_profile: x and y differ in length");
    if (x.empty()) throw InsufficientDataError("bin_profile: no data");
    if (n_bins < 10) throw ConfigError("bin_profile: at least 10 bins required");
    BinnedProfile p;
    if (range) {
        p.lo = range->first;
        p.hi = range->second;
    } else {
        const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
        p.lo = *mn;
        p.hi = *mx;
    }
    if (!(p.hi > p.lo)) p.hi = p.lo + 1.0;
    p.width = (p.hi - p.lo) / static_cast<double>(n_bins);
    std::vector<std::vector<double>> bins(n_bins);
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] < p.lo || x[i] > p.hi) continue;
        auto b = static_cast<std::size_t>((x[i] - p.lo) / p.width);
        bins[std::min(b, n_bins - 1)].push_back(y[i]);
    }
    p.centers.resize(n_bins);
    p.mean.assign(n_bins, 0.0);
    p.q1.assign(n_bins, 0.0);
    p.median.assign(n_bins, 0.0);
    p.q3.assign(n_bins, 0.0);
    p.count.assign(n_bins, 0);
    std::size_t weighted = 0;
    for (std::size_t b = 0; b < n_bins; ++b) {
        p.centers[b] = p.lo + (static_cast<double>(b) + 0.5) * p.width;
        auto& v = bins[b];
        p.count[b] = v.size();
        if (v.empty()) continue;
        double sum = 0.0;
        for (double yi : v) sum += yi;
        p.mean[b] = sum / static_cast<double>(v.size());
        if (sum > 0) ++weighted;
        std::sort(v.begin(), v.end());
        p.q1[b] = quantile(v, 0.25);
        p.median[b] = quantile(v, 0.5);
        p.q3[b] = quantile(v, 0.75);
    }
    p.degenerate = weighted <= 1;
    return p;
}

BinnedProfile bin_profile(const Eigen::VectorXd& probabilities, const ZeroOrderBasis& basis, std::size_t n_bins) {
    std::vector<double> x(basis.size()), y(basis.size());
    for (std::size_t i = 0; i < basis.size(); ++i) {
        x[i] = basis.entries[i].energy;
        y[i] = probabilities[static_cast<Eigen::Index>(i)];
    }
    return bin_profile(x, y, n_bins);
}

BinnedProfile bin_profile(const std::vector<std::pair<double, double>>& envelope, std::size_t n_bins) {
    std::vector<double> x, y;
    x.reserve(envelope.size());
    y.reserve(envelope.size());
    for (const auto& [e, w] : envelope) {
        x.push_back(e);
        y.push_back(w);
    }
    return bin_profile(x, y, n_bins);
}

std::size_t default_bin_count(double span, double gamma) {
    const double per = std::ceil(span / gamma) * 4.0;
    return std::max<std::size_t>(25, static_cast<std::size_t>(per));
}

double lorentzian_profile(double x, double center, double gamma, double amplitude) {
    const double d = x - center;
    return amplitude * gamma / (std::numbers::pi * (d * d + gamma * gamma));
}

LorentzianFit fit_lorentzian(const BinnedProfile& profile, double center0, double gamma0,
                             std::optional<double> amplitude0, const FitOptions& options) {
    if (!(gamma0 > 0)) throw ConfigError("fit_lorentzian: initial half-width must be > 0");
    std::vector<double> xs, ms, ws;
    for (std::size_t b = 0; b < profile.size(); ++b) {
        if (profile.count[b] < std::max<std::size_t>(options.min_count, 1)) continue;
        if (options.range && (profile.centers[b] < options.range->first || profile.centers[b] > options.range->second))
            continue;
        xs.push_back(profile.centers[b]);
        ms.push_back(profile.mean[b]);
        ws.push_back(std::sqrt(static_cast<double>(profile.count[b])));
    }
    const std::size_t n = xs.size();
    if (n < 5) throw InsufficientDataError("fit_lorentzian: fewer than 5 populated bins");

    double amp0;
    if (amplitude0) {
        amp0 = *amplitude0;
    } else {
        double num = 0, den = 0;
        for (std::size_t i = 0; i < n; ++i) {
            num += ws[i] * ws[i] * ms[i];
            den += ws[i] * ws[i] * lorentzian_profile(xs[i], center0, gamma0, 1.0);
        }
        amp0 = num / den;
    }
    if (!(amp0 > 0)) throw InsufficientDataError("fit_lorentzian: profile carries no weight");

    Eigen::Vector3d theta(center0, std::log(gamma0), std::log(amp0));
    Eigen::VectorXd r(n);
    Eigen::MatrixXd J(n, 3);
    auto evaluate = [&](const Eigen::Vector3d& th, bool jac) {
        const double c = th[0], g = std::exp(th[1]), a = std::exp(th[2]);
        double cost = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = xs[i] - c;
            const double den = d * d + g * g;
            const double f = a * g / (std::numbers::pi * den);
            const double ratio = ms[i] / f;
            const auto ii = static_cast<Eigen::Index>(i);
            r[ii] = ws[i] * (ratio - 1.0);
            cost += r[ii] * r[ii];
            if (jac) {
                // dr/dtheta = -w * ratio * dln f/dtheta
                const double s = -ws[i] * ratio;
                J(ii, 0) = s * (2.0 * d / den);
                J(ii, 1) = s * (1.0 - 2.0 * g * g / den);
                J(ii, 2) = s;
            }
        }
        return cost;
    };

    double cost = evaluate(theta, true);
    double lambda = 1e-3;
    LorentzianFit fit;
    int it = 0;
    bool converged = false;
    for (; it < options.max_iterations; ++it) {
        const Eigen::Matrix3d JtJ = J.transpose() * J;
        const Eigen::Vector3d grad = J.transpose() * r;
        bool accepted = false;
        Eigen::Vector3d step = Eigen::Vector3d::Zero();
        while (lambda < 1e20) {
            Eigen::Matrix3d A = JtJ;
            for (int d = 0; d < 3; ++d) A(d, d) += lambda * std::max(JtJ(d, d), 1e-300);
            step = A.ldlt().solve(-grad);
            const Eigen::Vector3d trial = theta + step;
            Eigen::VectorXd r_save = r;
            const double trial_cost = evaluate(trial, false);
            if (std::isfinite(trial_cost) && trial_cost <= cost) {
                theta = trial;
                cost = evaluate(theta, true);
                lambda = std::max(lambda * 0.1, 1e-12);
                accepted = true;
                break;
            }
            r = r_save;
            lambda *= 10.0;
        }
        // Step size relative to the half-width for the center; the other two
        // parameters are logarithms and therefore already relative.
        const double g = std::exp(theta[1]);
        const double size = std::max({std::abs(step[0]) / g, std::abs(step[1]), std::abs(step[2])});
        if (!accepted || size <= options.step_tolerance) {
            converged = true;
            ++it;
            break;
        }
    }
    fit.center = theta[0];
    fit.gamma = std::exp(theta[1]);
    fit.amplitude = std::exp(theta[2]);
    fit.offset = fit.center - options.reference;
    fit.iterations = it;
    fit.bins_used = n;
    fit.residual_norm = std::sqrt(cost);
    if (!converged)
        throw FitError("Lorentzian fit did not converge in " + std::to_string(options.max_iterations) + " iterations",
                       it, fit.center, fit.gamma, fit.amplitude);
    fit.converged = true;
    // Covariance from the Gauss-Newton normal matrix scaled by the residual variance.
    const Eigen::Matrix3d JtJ = J.transpose() * J;
    const double dof = n > 3 ? static_cast<double>(n - 3) : 1.0;
    const Eigen::Matrix3d cov = JtJ.inverse() * (cost / dof);
    fit.sigma_center = std::sqrt(std::max(cov(0, 0), 0.0));
    fit.sigma_gamma = fit.gamma * std::sqrt(std::max(cov(1, 1), 0.0));
    fit.sigma_amplitude = fit.amplitude * std::sqrt(std::max(cov(2, 2), 0.0));
    return fit;
}

void to_json(nlohmann::json& j, const LorentzianFit& f) {
    j = nlohmann::json{
        {"center", f.center},           {"gamma", f.gamma},
        {"amplitude", f.amplitude},     {"offset", f.offset},
        {"residual_norm", f.residual_norm},
        {"sigma_center", f.sigma_center}, {"sigma_gamma", f.sigma_gamma},
        {"sigma_amplitude", f.sigma_amplitude},
        {"bins_used", f.bins_used},     {"iterations", f.iterations},
        {"converged", f.converged},
    };
}

MomentReport fluctuation_test(const std::vector<double>& values) {
    if (values.size() < 500)
        throw InsufficientDataError("fluctuation_test needs at least 500 samples (got " +
                                    std::to_string(values.size()) + ")");
    MomentReport r;
    r.n = values.size();
    const double n = static_cast<double>(r.n);
    double sum = 0;
    for (double v : values) sum += v;
    r.mean = sum / n;
    double m2 = 0, m3 = 0, m4 = 0;
    for (double v : values) {
        const double d = v - r.mean;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    r.variance = m2;
    r.skewness = m2 > 0 ? m3 / std::pow(m2, 1.5) : 0.0;
    r.excess_kurtosis = m2 > 0 ? m4 / (m2 * m2) - 3.0 : -3.0;
    r.pass = std::abs(r.mean) <= 0.1 && std::abs(r.variance - 1.0) <= 0.1 && std::abs(r.skewness) <= 0.2 &&
             std::abs(r.excess_kurtosis) <= 0.5;
    return r;
}

void to_json(nlohmann::json& j, const MomentReport& r) {
    j = nlohmann::json{{"n", r.n},
                       {"mean", r.mean},
                       {"variance", r.variance},
                       {"skewness", r.skewness},
                       {"excess_kurtosis", r.excess_kurtosis},
                       {"pass", r.pass}};
}

std::array<double, 2> chi2_quartiles(int dof) {
    switch (dof) {
        case 1: return {0.10153104426762156, 1.3233036969314664};
        case 2: return {0.2876820724517809, 1.3862943611198906};  // -ln(3/4), ln 4
        default: throw ConfigError("chi2_quartiles: dof must be 1 or 2");
    }
}

QuartileOverlay quartile_overlay(const BinnedProfile& profile, int dof) {
    const auto q = chi2_quartiles(dof);
    QuartileOverlay o;
    o.q1.resize(profile.size());
    o.q3.resize(profile.size());
    for (std::size_t b = 0; b < profile.size(); ++b) {
        o.q1[b] = profile.mean[b] * q[0];
        o.q3[b] = profile.mean[b] * q[1];
    }
    return o;
}

std::string profile_csv_impl(const BinnedProfile& p, int dof, const std::vector<double>& expected_mean) {
    const auto q = chi2_quartiles(dof);
    CsvTable t({"bin_center", "mean", "q1", "q3", "count", "expected_mean", "expected_q1", "expected_q3"});
    for (std::size_t b = 0; b < p.size(); ++b) {
        const double e = expected_mean[b];
        t.row({p.centers[b], p.mean[b], p.q1[b], p.q3[b], static_cast<double>(p.count[b]), e, e * q[0], e * q[1]});
    }
    return t.str();
}

}  // namespace qtherm
