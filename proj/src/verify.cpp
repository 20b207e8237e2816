#include "qtherm/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <memory>
#include <numbers>
#include <sstream>
#include <unistd.h>

#include "qtherm/errors.hpp"
#include "qtherm/io.hpp"
#include "qtherm/rng.hpp"

namespace qtherm {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;

std::string fmt(double x, int prec = 4) {
    std::ostringstream ss;
    ss.precision(prec);
    ss << x;
    return ss.str();
}

ExperimentConfig seeded(const std::string& name, std::uint64_t seed) {
    ExperimentConfig c = preset(name);
    c.model.seed = seed;
    if (c.curve.static_model) c.curve.static_model->seed = seed;
    return c;
}

// Basis indices with energy in [lo, hi]; the basis is sorted by energy.
std::pair<std::size_t, std::size_t> energy_range(const ZeroOrderBasis& basis, double lo, double hi) {
    auto first = std::lower_bound(basis.entries.begin(), basis.entries.end(), lo,
                                  [](const BasisEntry& e, double v) { return e.energy < v; });
    auto last = std::upper_bound(basis.entries.begin(), basis.entries.end(), hi,
                                 [](double v, const BasisEntry& e) { return v < e.energy; });
    return {static_cast<std::size_t>(first - basis.entries.begin()),
            static_cast<std::size_t>(last - basis.entries.begin())};
}

constexpr double kPoolRange = 20.0;
constexpr std::size_t kPoolBins = 400;
constexpr std::size_t kQuartileBins = 40;
constexpr double kMomentRange = 5.0;

struct PoolData {
    std::vector<double> x, y;
    std::vector<std::vector<double>> components;  // rescaled amplitude parts
};

PooledStatistics finish_pool(const PoolData& d, int dof, std::size_t states) {
    PooledStatistics out;
    out.states = states;
    out.samples = d.x.size();
    out.profile = bin_profile(d.x, d.y, kPoolBins, std::make_pair(-kPoolRange, kPoolRange));
    out.fit = fit_lorentzian(out.profile, 0.0, 1.0, 1.0);
    const double scale = dof == 2 ? 0.5 : 1.0;
    out.pass_moments = true;
    for (const auto& comp : d.components) {
        std::vector<double> g;
        for (std::size_t i = 0; i < d.x.size(); ++i) {
            if (std::abs(d.x[i]) > kMomentRange) continue;
            const double f = lorentzian_profile(d.x[i], out.fit.center, out.fit.gamma, out.fit.amplitude);
            g.push_back(comp[i] / std::sqrt(f * scale));
        }
        out.moments.push_back(fluctuation_test(g));
        out.pass_moments = out.pass_moments && out.moments.back().pass;
    }
    std::vector<double> ratio(d.x.size());
    for (std::size_t i = 0; i < d.x.size(); ++i)
        ratio[i] = d.y[i] / lorentzian_profile(d.x[i], out.fit.center, out.fit.gamma, out.fit.amplitude);
    out.normalized = bin_profile(d.x, ratio, kQuartileBins, std::make_pair(-kPoolRange, kPoolRange));
    const auto& q = out.normalized;
    const auto overlay = quartile_overlay(q, dof);
    for (std::size_t b = 0; b < q.size(); ++b) {
        if (q.count[b] < 200) continue;
        ++out.quartile_bins;
        const double e1 = std::abs(q.q1[b] - overlay.q1[b]) / overlay.q1[b];
        const double e3 = std::abs(q.q3[b] - overlay.q3[b]) / overlay.q3[b];
        out.worst_quartile_error = std::max({out.worst_quartile_error, e1, e3});
    }
    out.pass_quartiles = out.quartile_bins > 0 && out.worst_quartile_error <= 0.15;
    return out;
}

json pooled_json(const PooledStatistics& p) {
    json m = json::array();
    for (const auto& r : p.moments) m.push_back(r);
    return {{"states", p.states},           {"samples", p.samples},
            {"width_ratio", p.fit.gamma},   {"center", p.fit.center},
            {"amplitude", p.fit.amplitude}, {"moments", m},
            {"quartile_bins", p.quartile_bins}, {"worst_quartile_error", p.worst_quartile_error},
            {"pass_moments", p.pass_moments},   {"pass_quartiles", p.pass_quartiles}};
}

// Shared, lazily built state across criteria.
struct Context {
    VerifyOptions opt;
    std::unique_ptr<Simulation> desk;
    std::optional<RunResult> fig2, fig3;
    std::optional<PooledStatistics> eigen, evolved;

    const Simulation& desk_sim() {
        if (!desk) desk = std::make_unique<Simulation>(seeded("fig3", opt.seed).model);
        return *desk;
    }
    const RunResult& fig2_run() {
        if (!fig2) fig2 = run_single(seeded("fig2", opt.seed), std::nullopt, {opt.jobs, &desk_sim()});
        return *fig2;
    }
    const RunResult& fig3_run() {
        if (!fig3) fig3 = run_single(seeded("fig3", opt.seed), std::nullopt, {opt.jobs, &desk_sim()});
        return *fig3;
    }
    const PooledStatistics& eigen_stats() {
        if (!eigen) eigen = eigenstate_statistics(desk_sim());
        return *eigen;
    }
    const PooledStatistics& evolved_stats() {
        if (!evolved) evolved = evolved_statistics(desk_sim());
        return *evolved;
    }
};

// 1. Exact identities.
CriterionResult criterion1(Context& ctx) {
    CriterionResult r{1, "exact identities", false, "", json::object(), 0};
    const ModelSpec spec = seeded("desk-small", ctx.opt.seed).model;
    Model model = build_hamiltonian(spec);
    const Eigen::MatrixXd H = model.hamiltonian;
    const ZeroOrderBasis basis = model.basis;
    const SpectralDecomposition d = diagonalize(std::move(model.hamiltonian));
    const auto n = static_cast<Eigen::Index>(basis.size());

    // Split identity over 1000 random states of several shapes.
    Rng rng = Rng::stream(ctx.opt.seed, Stream::synthetic, 1);
    double worst_split = 0;
    for (int k = 0; k < 1000; ++k) {
        PureState st;
        st.amplitudes = Eigen::VectorXcd::Zero(n);
        const int kind = k % 4;
        const int level = k % basis.n_levels;
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto& e = basis.entries[static_cast<std::size_t>(i)];
            const auto z = rng.complex_normal();
            if (kind == 0) st.amplitudes[i] = z;
            else if (kind == 1 && e.s == level) st.amplitudes[i] = z;
            else if (kind == 2 && rng.uniform() < 0.05) st.amplitudes[i] = z;
            else if (kind == 3) st.amplitudes[i] = z * std::exp(-std::abs(e.energy - spec.center_energy) * 3.0 * rng.uniform());
        }
        if (st.amplitudes.norm() == 0) st.amplitudes[k % n] = 1.0;
        st.amplitudes.normalize();
        const auto b = split_entropy(st, basis, spec);
        const double err = std::abs(b.S_univ - (b.S_sys + b.S_env)) / std::max(b.S_univ, 1e-300);
        worst_split = std::max(worst_split, b.S_univ > 0 ? err : std::abs(b.S_sys + b.S_env));
    }
    // Single basis states carry zero entropy.
    double worst_basis = 0;
    for (std::size_t i = 0; i < basis.size(); ++i) {
        const auto b = split_entropy(basis_state_at(basis, i), basis, spec);
        worst_basis = std::max({worst_basis, std::abs(b.S_univ), std::abs(b.S_sys), std::abs(b.S_env)});
    }
    // Norm and energy under propagation.
    const double t_eq = equilibration_time(spec);
    std::vector<PureState> probes;
    probes.push_back(basis_state_at(basis, basis.nearest(0, spec.center_energy)));
    probes.push_back(build_lorentzian_state(basis, spec, 0, spec.center_energy, 0.15, 7).state);
    probes.push_back(build_lorentzian_state(basis, spec, 1, spec.center_energy, 0.3, 8).state);
    const std::vector<double> times = {0.0, 0.37, 3.1, t_eq, 2 * t_eq, 10 * t_eq};
    double worst_norm = 0, worst_energy = 0;
    for (const auto& p : probes) {
        const double e0 = (p.amplitudes.adjoint() * H * p.amplitudes)(0).real();
        const auto cols = propagate_many(p, d, times);
        for (Eigen::Index q = 0; q < cols.cols(); ++q) {
            const Eigen::VectorXcd c = cols.col(q);
            worst_norm = std::max(worst_norm, std::abs(c.norm() - 1.0));
            const double e = (c.adjoint() * H * c)(0).real();
            worst_energy = std::max(worst_energy, std::abs(e - e0) / std::abs(e0));
        }
    }
    r.pass = worst_split <= 1e-12 && worst_basis == 0.0 && worst_norm <= 1e-10 && worst_energy <= 1e-8;
    r.details = {{"dimension", basis.size()},          {"max_split_rel_error", worst_split},
                 {"max_basis_state_entropy", worst_basis}, {"max_norm_deviation", worst_norm},
                 {"max_energy_rel_deviation", worst_energy}};
    r.summary = "split rel err " + fmt(worst_split, 3) + " (<=1e-12), basis-state S " + fmt(worst_basis, 3) +
                " (=0), norm dev " + fmt(worst_norm, 3) + " (<=1e-10), <H> rel dev " + fmt(worst_energy, 3) +
                " (<=1e-8)";
    return r;
}

// 2. Uniform microcanonical distributions: Delta S_env = Q / T.
CriterionResult criterion2(Context&) {
    CriterionResult r{2, "uniform microcanonical oracle", false, "", json::array(), 0};
    struct Case {
        std::int64_t w0;
        int levels;
        int start;
    };
    const std::vector<Case> cases = {{4096, 3, 0}, {1024, 5, 0}, {1024, 5, 2}, {64, 2, 0}, {8192, 4, 1}};
    double worst = 0;
    for (const auto& c : cases) {
        // Bath multiplicity on level s is w0 / 2^s, which is exactly
        // proportional to exp(-E_s / T) when the level spacing is T ln 2.
        ModelSpec spec;
        spec.temperature = 6.22;
        spec.n_levels = c.levels;
        spec.level_spacing = spec.temperature * std::numbers::ln2;
        ZeroOrderBasis basis;
        basis.n_levels = c.levels;
        const double E = 30.0;
        for (int s = 0; s < c.levels; ++s)
            for (std::int64_t e = 0; e < (c.w0 >> s); ++e) basis.entries.push_back({s, e, E});
        const auto n = static_cast<Eigen::Index>(basis.size());
        Eigen::VectorXd p0 = Eigen::VectorXd::Zero(n), pf = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
        const double w_start = static_cast<double>(c.w0 >> c.start);
        for (Eigen::Index i = 0; i < n; ++i)
            if (basis.entries[static_cast<std::size_t>(i)].s == c.start) p0[i] = 1.0 / w_start;
        const auto b0 = split_entropy(p0, basis, spec);
        const auto bf = split_entropy(pf, basis, spec);
        const double dS_env = bf.S_env - b0.S_env;
        const double q_over_t = heat(b0, bf) / spec.temperature;
        worst = std::max(worst, std::abs(dS_env - q_over_t));
        r.details.push_back({{"w0", c.w0}, {"levels", c.levels}, {"start", c.start}, {"dS_env", dS_env},
                             {"Q_over_T", q_over_t}});
    }
    r.pass = worst <= 1e-10;
    r.summary = "max |dS_env - Q/T| = " + fmt(worst, 3) + " over " + std::to_string(cases.size()) +
                " constructions (<=1e-10)";
    return r;
}

// 3. Initial-state entropy vs the master formula (no dynamics needed).
CriterionResult criterion3(Context& ctx) {
    CriterionResult r{3, "master entropy of initial states", false, "", json::array(), 0};
    ExperimentConfig cfg = seeded("fig4", ctx.opt.seed);
    cfg.curve.gamma0_rho0 = {0.001, 0.01, 0.03, 10, 30, 100, 300};
    cfg.model.coupling = 0;  // static points only
    const auto res = run_entropy_curve(cfg, std::nullopt, {ctx.opt.jobs, nullptr});
    bool ok = true;
    double worst_above = 0, worst_below = 0;
    for (const auto& p : res.points) {
        if (!p.has_static) continue;
        const bool below = p.gamma0_rho0 < analytic::resolution_threshold();
        const double err = below ? std::abs(p.S_static) : std::abs(p.S_static - p.S_static_pred);
        const bool pass = below ? err <= 0.2 : err <= 0.15;
        ok = ok && pass;
        (below ? worst_below : worst_above) = std::max(below ? worst_below : worst_above, err);
        r.details.push_back({{"gamma0_rho0", p.gamma0_rho0}, {"S_sim", p.S_static}, {"S_sem", p.S_static_sem},
                             {"S_pred", p.S_static_pred}, {"pass", pass}});
    }
    r.pass = ok;
    r.summary = "resolved max |S - S_master| = " + fmt(worst_above) + " (<=0.15), below-threshold max |S| = " +
                fmt(worst_below) + " (<=0.2)";
    return r;
}

// 4. Spreading law: widths of evolved states and eigenstates.
CriterionResult criterion4(Context& ctx) {
    CriterionResult r{4, "spreading law", false, "", json::object(), 0};
    const Simulation& sim = ctx.desk_sim();
    const auto& d = sim.derived();
    const RunResult& basis_run = ctx.fig3_run();
    const RunResult& lor_run = ctx.fig2_run();
    const auto& eig = ctx.eigen_stats();
    const double level_spacings = d.spreading * d.rho_f;
    const bool regime = d.dimension >= 4000 && d.dimension <= 8000 && level_spacings >= 5 && level_spacings <= 50;
    if (!basis_run.final_fit || !lor_run.final_fit) {
        r.summary = "fit failed: " + basis_run.fit_error + " " + lor_run.fit_error;
        return r;
    }
    const double ratio_basis = basis_run.final_fit->gamma / basis_run.prediction.gamma_f;
    const double ratio_lor = lor_run.final_fit->gamma / lor_run.prediction.gamma_f;
    const double ratio_eig = eig.fit.gamma;
    // Evolved width over the fitted eigenstate width at the same density.
    const double gamma_eig = ratio_eig * analytic::eigenstate_width(sim.spec().coupling, basis_run.initial.rho_f);
    const double evolved_over_eigen = basis_run.final_fit->gamma / gamma_eig;
    r.pass = regime && std::abs(ratio_basis - 1) <= 0.2 && std::abs(ratio_lor - 1) <= 0.2 &&
             std::abs(ratio_eig - 1) <= 0.2 && std::abs(evolved_over_eigen - 2) <= 0.3;
    r.details = {{"dimension", d.dimension},
                 {"spreading_in_level_spacings", level_spacings},
                 {"basis_state", {{"fit", *basis_run.final_fit}, {"predicted", basis_run.prediction.gamma_f}, {"ratio", ratio_basis}}},
                 {"lorentzian", {{"fit", *lor_run.final_fit}, {"predicted", lor_run.prediction.gamma_f}, {"ratio", ratio_lor}}},
                 {"eigenstates", pooled_json(eig)},
                 {"evolved_over_eigen", evolved_over_eigen}};
    r.summary = "N=" + std::to_string(d.dimension) + ", spread=" + fmt(level_spacings, 3) +
                " spacings; basis gamma/pred=" + fmt(ratio_basis) + ", Lorentzian gamma/pred=" + fmt(ratio_lor) +
                ", eigenstate gamma/pred=" + fmt(ratio_eig) + " (each 1+-0.2); evolved/eigen=" +
                fmt(evolved_over_eigen) + " (2+-0.3)";
    return r;
}

// 5. Excess entropy across the gamma0 grid.
CriterionResult criterion5(Context& ctx) {
    CriterionResult r{5, "master excess entropy", false, "", json::array(), 0};
    const ExperimentConfig cfg = seeded("fig5", ctx.opt.seed);
    const auto res = run_entropy_curve(cfg, std::nullopt, {ctx.opt.jobs, &ctx.desk_sim()});
    // Near the resolution threshold the piecewise formula is only an
    // asymptote; points within the crossover band are reported, not scored.
    const double thr = analytic::resolution_threshold();
    const double band_lo = thr / 4, band_hi = 40 * thr;
    bool ok = true;
    std::size_t scored = 0, clamped = 0, resolved = 0;
    double worst = 0;
    for (const auto& p : res.points) {
        if (!p.has_dynamics) continue;
        const bool basis = p.family == "basis_state";
        const bool in_band = !basis && p.gamma0_rho0 >= band_lo && p.gamma0_rho0 <= band_hi;
        const double err = std::abs(p.dSx - p.dSx_pred);
        const bool pass = err <= 0.2;
        if (!in_band) {
            ++scored;
            ok = ok && pass;
            worst = std::max(worst, err);
            if (p.regime == analytic::Regime::clamped) ++clamped;
            else ++resolved;
        }
        r.details.push_back({{"family", p.family}, {"gamma0_rho0", p.gamma0_rho0}, {"dSx_sim", p.dSx},
                             {"dSx_sem", p.dSx_sem}, {"dSx_pred", p.dSx_pred}, {"regime", analytic::to_string(p.regime)},
                             {"scored", !in_band}, {"pass", pass}});
    }
    r.pass = ok && clamped >= 2 && resolved >= 2;
    r.summary = "scored " + std::to_string(scored) + " points (" + std::to_string(clamped) + " clamped, " +
                std::to_string(resolved) + " resolved), max |dSx - pred| = " + fmt(worst) + " (<=0.2)";
    return r;
}

// 6. Microcanonical-limit sweep.
CriterionResult criterion6(Context& ctx) {
    CriterionResult r{6, "microcanonical limit sweep", false, "", json::object(), 0};
    const ExperimentConfig cfg = seeded("fig6", ctx.opt.seed);
    const auto res = run_limit_sweep(cfg, std::nullopt, {ctx.opt.jobs, nullptr});
    bool monotone = true;
    std::size_t checked = 0;
    bool ratios_ok = true;
    json steps = json::array(), ratios = json::array();
    double basis_mean = 0;
    for (const auto& s : res.steps) basis_mean += s.dSx_basis / static_cast<double>(res.steps.size());
    double basis_dev = 0;
    for (std::size_t j = 0; j < res.steps.size(); ++j) {
        const auto& s = res.steps[j];
        basis_dev = std::max(basis_dev, std::abs(s.dSx_basis - basis_mean));
        steps.push_back({{"step", j}, {"k", s.k}, {"A", s.A}, {"N_lorentzian", s.N_lorentzian}, {"N_basis", s.N_basis},
                         {"dSx_lorentzian", s.dSx_lorentzian}, {"sem_lorentzian", s.sem_lorentzian},
                         {"pred_lorentzian", s.pred_lorentzian}, {"dSx_basis", s.dSx_basis},
                         {"sem_basis", s.sem_basis}, {"pred_basis", s.pred_basis}});
        if (j == 0) continue;
        const auto& prev = res.steps[j - 1];
        if (!(s.dSx_lorentzian < prev.dSx_lorentzian)) monotone = false;
        if (prev.dSx_lorentzian < 0.3) {
            const double q = s.dSx_lorentzian / prev.dSx_lorentzian;
            ++checked;
            const bool pass = q >= 0.35 && q <= 0.65;
            ratios_ok = ratios_ok && pass;
            ratios.push_back({{"from", j - 1}, {"ratio", q}, {"pass", pass}});
        }
    }
    r.pass = monotone && checked >= 2 && ratios_ok && basis_dev <= 0.15;
    std::string rs;
    for (const auto& q : ratios) rs += (rs.empty() ? "" : ",") + fmt(q["ratio"].get<double>(), 3);
    r.details = {{"steps", steps}, {"ratios", ratios}, {"monotone", monotone}, {"basis_mean", basis_mean},
                 {"basis_max_deviation", basis_dev}};
    r.summary = std::string("Lorentzian ") + (monotone ? "monotone" : "NOT monotone") + ", ratios [" + rs +
                "] (in [0.35,0.65], " + std::to_string(checked) + " checked); basis max dev " + fmt(basis_dev) +
                " from mean " + fmt(basis_mean) + " (<=0.15)";
    return r;
}

// 7. Thermalization of the system distribution.
CriterionResult criterion7(Context& ctx) {
    CriterionResult r{7, "thermalization", false, "", json::object(), 0};
    const RunResult& run = ctx.fig2_run();
    const auto target = boltzmann_distribution(run.config.model);
    const double tv = total_variation(run.p_s_mean, target);
    r.pass = tv <= 0.02 && run.config.n_seeds == 5;
    r.details = {{"p_s", run.p_s_mean}, {"boltzmann", target}, {"total_variation", tv}, {"seeds", run.config.n_seeds}};
    std::string ps;
    for (double p : run.p_s_mean) ps += (ps.empty() ? "" : ", ") + fmt(p);
    r.summary = "p_s = (" + ps + "), TV from Boltzmann = " + fmt(tv, 3) + " (<=0.02, 5 seeds)";
    return r;
}

// 8. Coefficient statistics and the g0 constant.
CriterionResult criterion8(Context& ctx) {
    CriterionResult r{8, "coefficient statistics", false, "", json::object(), 0};
    const auto& eig = ctx.eigen_stats();
    const auto& ev = ctx.evolved_stats();
    const double g0 = g0_monte_carlo(ctx.opt.seed, 40'000'000);
    const bool g0_ok = std::abs(g0 - 0.4228) <= 0.001;
    r.pass = eig.pass_moments && eig.pass_quartiles && ev.pass_moments && ev.pass_quartiles && g0_ok;
    r.details = {{"eigenstates", pooled_json(eig)}, {"evolved", pooled_json(ev)}, {"g0_monte_carlo", g0}};
    auto mom = [](const MomentReport& m) {
        return "var " + fmt(m.variance, 3) + " skew " + fmt(m.skewness, 2) + " kurt " + fmt(m.excess_kurtosis, 2);
    };
    r.summary = "eigen [" + mom(eig.moments[0]) + ", quartile err " + fmt(eig.worst_quartile_error, 3) +
                "]; evolved re [" + mom(ev.moments[0]) + "] im [" + mom(ev.moments[1]) + ", quartile err " +
                fmt(ev.worst_quartile_error, 3) + "] (<=0.15); g0 MC " + fmt(g0, 6) + " (0.4228+-0.001)";
    return r;
}

// 9. Determinism from the manifest, and with parallel jobs.
CriterionResult criterion9(Context& ctx) {
    CriterionResult r{9, "determinism", false, "", json::object(), 0};
    const fs::path root = fs::temp_directory_path() / ("qtherm-verify-" + std::to_string(::getpid()));
    fs::remove_all(root);
    const ExperimentConfig cfg = seeded("desk-small", ctx.opt.seed);
    run_single(cfg, root / "a", {1, nullptr});
    const ExperimentConfig again = load_config(root / "a" / "manifest.json");
    run_single(again, root / "b", {2, nullptr});
    ExperimentConfig curve = cfg;
    curve.curve.gamma0_rho0 = {0.01, 1, 10};
    run_entropy_curve(curve, root / "c", {1, nullptr});
    run_entropy_curve(load_config(root / "c" / "manifest.json"), root / "d", {2, nullptr});
    std::vector<std::string> mismatched;
    std::size_t compared = 0;
    auto compare = [&](const fs::path& x, const fs::path& y) {
        for (const auto& entry : fs::directory_iterator(x)) {
            if (entry.path().extension() != ".csv") continue;
            ++compared;
            const fs::path other = y / entry.path().filename();
            if (!fs::exists(other) || read_text(entry.path()) != read_text(other))
                mismatched.push_back(entry.path().filename().string());
        }
    };
    compare(root / "a", root / "b");
    compare(root / "c", root / "d");
    fs::remove_all(root);
    r.pass = mismatched.empty() && compared >= 5;
    r.details = {{"compared", compared}, {"mismatched", mismatched}};
    r.summary = std::to_string(compared) + " CSV files re-run from manifests (jobs 1 vs 2), " +
                std::to_string(mismatched.size()) + " differ";
    return r;
}

}  // namespace

PooledStatistics eigenstate_statistics(const Simulation& sim) {
    const ModelSpec& spec = sim.spec();
    const auto& basis = sim.basis();
    const auto& d = sim.spectrum();
    const double W = spec.resolved_half_width();
    PoolData pool;
    pool.components.resize(1);
    std::size_t states = 0;
    for (Eigen::Index xi = 0; xi < d.size(); ++xi) {
        const double e = d.energies[xi];
        if (std::abs(e - spec.center_energy) >= W / 2) continue;
        ++states;
        const double rho = total_density(e, spec);
        const double w = analytic::eigenstate_width(spec.coupling, rho);
        const auto [lo, hi] = energy_range(basis, e - kPoolRange * w, e + kPoolRange * w);
        for (std::size_t i = lo; i < hi; ++i) {
            const double c = d.vectors(static_cast<Eigen::Index>(i), xi);
            const double scaled = c * std::sqrt(rho * w);
            pool.x.push_back((basis.entries[i].energy - e) / w);
            pool.y.push_back(scaled * scaled);
            pool.components[0].push_back(scaled);
        }
    }
    return finish_pool(pool, 1, states);
}

PooledStatistics evolved_statistics(const Simulation& sim, std::size_t n_states) {
    const ModelSpec& spec = sim.spec();
    const auto& basis = sim.basis();
    const auto idx = nearest_levels(basis, 0, spec.center_energy, n_states);
    std::vector<PureState> states;
    for (auto i : idx) states.push_back(basis_state_at(basis, i));
    const double t_eq = equilibration_time(spec);
    std::vector<Eigen::VectorXcd> cols(states.size());
    sim.evolve(states, {t_eq}, [&](std::size_t i, std::size_t, const Eigen::VectorXcd& c) { cols[i] = c; });
    PoolData pool;
    pool.components.resize(2);
    for (std::size_t k = 0; k < idx.size(); ++k) {
        const double e = basis.entries[idx[k]].energy;
        const double rho = total_density(e, spec);
        const double w = analytic::evolved_width(spec.coupling, rho);
        const auto [lo, hi] = energy_range(basis, e - kPoolRange * w, e + kPoolRange * w);
        for (std::size_t i = lo; i < hi; ++i) {
            if (i == idx[k]) continue;  // return amplitude of the initial state
            const auto c = cols[k][static_cast<Eigen::Index>(i)] * std::sqrt(rho * w);
            pool.x.push_back((basis.entries[i].energy - e) / w);
            pool.y.push_back(std::norm(c));
            pool.components[0].push_back(c.real());
            pool.components[1].push_back(c.imag());
        }
    }
    return finish_pool(pool, 2, idx.size());
}

double g0_monte_carlo(std::uint64_t seed, std::size_t draws) {
    Rng rng = Rng::stream(seed, Stream::monte_carlo);
    double sum = 0;
    for (std::size_t i = 0; i < draws; ++i) {
        const double a = std::norm(rng.complex_normal());
        if (a > 0) sum += a * std::log(a);
    }
    return sum / static_cast<double>(draws);
}

json VerifyReport::to_json() const {
    json c = json::array();
    for (const auto& r : criteria)
        c.push_back({{"id", r.id}, {"name", r.name}, {"pass", r.pass}, {"summary", r.summary},
                     {"seconds", r.seconds}, {"details", r.details}});
    return {{"qtherm_version", kVersion}, {"pass", pass}, {"criteria", c}};
}

VerifyReport verify(const VerifyOptions& options) {
    Context ctx{options, nullptr, std::nullopt, std::nullopt, std::nullopt, std::nullopt};
    using Fn = CriterionResult (*)(Context&);
    const std::vector<std::pair<int, Fn>> all = {
        {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4}, {5, criterion5},
        {6, criterion6}, {7, criterion7}, {8, criterion8}, {9, criterion9},
    };
    VerifyReport report;
    report.pass = true;
    for (const auto& [id, fn] : all) {
        if (!options.only.empty() && std::find(options.only.begin(), options.only.end(), id) == options.only.end())
            continue;
        const auto t0 = std::chrono::steady_clock::now();
        CriterionResult r;
        try {
            r = fn(ctx);
        } catch (const std::exception& e) {
            r = {id, "criterion " + std::to_string(id), false, std::string("error: ") + e.what(), json::object(), 0};
        }
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        report.pass = report.pass && r.pass;
        if (options.on_result) options.on_result(r);
        report.criteria.push_back(std::move(r));
    }
    return report;
}

}  // namespace qtherm
