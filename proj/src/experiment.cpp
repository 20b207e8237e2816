#include "qtherm/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <numeric>
#include <thread>

#include "qtherm/errors.hpp"
#include "qtherm/io.hpp"
#include "qtherm/rng.hpp"

namespace qtherm {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kRunExperiment = 1;
constexpr std::uint64_t kCurveStatic = 1000;
constexpr std::uint64_t kCurveDynamics = 2000;
constexpr std::uint64_t kSweepLorentzian = 3000;
constexpr std::uint64_t kSweepBasis = 4000;

// Upper bound on amplitude columns propagated together.
constexpr std::size_t kColumnsPerBatch = 768;

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
    jobs = std::max<std::size_t>(1, std::min(jobs, n));
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < jobs; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i; (i = next++) < n;) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

struct MeanSem {
    double mean = 0, sem = 0;
};

MeanSem mean_sem(const std::vector<double>& v) {
    MeanSem r;
    if (v.empty()) return r;
    r.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0;
        for (double x : v) ss += (x - r.mean) * (x - r.mean);
        r.sem = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
    }
    return r;
}

CsvTable prediction_table() {
    return CsvTable({"gamma0", "rho0", "rho_f", "k", "S_pred_initial", "S_pred_final", "dSx_pred", "regime"});
}

void add_prediction(CsvTable& t, const analytic::MasterPrediction& p) {
    t.row({format_number(p.gamma0), format_number(p.rho0), format_number(p.rho_f), format_number(p.k),
           format_number(p.S_initial), format_number(p.S_final), format_number(p.dSx_pred),
           analytic::to_string(p.regime)});
}

// Plateau-averaged summary of a (state, plateau times) trajectory.
struct Accumulator {
    EntropyBreakdown initial;
    std::vector<double> dsx, s_final;
    std::vector<std::vector<double>> p_s;
};

PlateauSummary summarize(const Accumulator& acc) {
    PlateauSummary s;
    s.initial = acc.initial;
    s.dSx = mean_sem(acc.dsx).mean;
    s.S_final = mean_sem(acc.s_final).mean;
    if (!acc.p_s.empty()) {
        s.p_s.assign(acc.p_s.front().size(), 0.0);
        for (const auto& p : acc.p_s)
            for (std::size_t i = 0; i < p.size(); ++i) s.p_s[i] += p[i];
        for (auto& x : s.p_s) x /= static_cast<double>(acc.p_s.size());
    }
    return s;
}

// Evolves states over plateau times only and returns per-state summaries.
std::vector<PlateauSummary> plateau_run(const Simulation& sim, const std::vector<PureState>& states,
                                        const std::vector<double>& times, std::size_t jobs) {
    std::vector<Accumulator> acc(states.size());
    for (std::size_t i = 0; i < states.size(); ++i) {
        acc[i].initial = split_entropy(states[i], sim.basis(), sim.spec());
        acc[i].dsx.resize(times.size());
        acc[i].s_final.resize(times.size());
        acc[i].p_s.resize(times.size());
    }
    sim.evolve(states, times, [&](std::size_t i, std::size_t q, const Eigen::VectorXcd& c) {
        const auto b = split_entropy(Eigen::VectorXd(c.cwiseAbs2()), sim.basis(), sim.spec(), times[q]);
        acc[i].dsx[q] = excess_entropy(acc[i].initial, b, sim.spec().temperature);
        acc[i].s_final[q] = b.S_univ;
        acc[i].p_s[q] = b.p_s;
    }, jobs);
    std::vector<PlateauSummary> out;
    out.reserve(states.size());
    for (const auto& a : acc) out.push_back(summarize(a));
    return out;
}

struct ProfileFit {
    BinnedProfile profile;
    std::optional<LorentzianFit> fit;
    std::string error;
};

// Bins p over the window (optionally restricted to one level and with one
// index excluded) and fits a Lorentzian within +-20 predicted widths.
ProfileFit profile_and_fit(const Eigen::VectorXd& p, const ZeroOrderBasis& basis, const ModelSpec& spec,
                           std::optional<int> level, std::optional<std::size_t> exclude, double center,
                           double gamma_pred, double density, std::size_t n_bins, bool do_fit) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < basis.size(); ++i) {
        if (level && basis.entries[i].s != *level) continue;
        if (exclude && i == *exclude) continue;
        x.push_back(basis.entries[i].energy);
        y.push_back(p[static_cast<Eigen::Index>(i)]);
    }
    const double W = spec.resolved_half_width();
    ProfileFit out;
    out.profile = bin_profile(x, y, n_bins, std::make_pair(spec.center_energy - W, spec.center_energy + W));
    if (!do_fit) return out;
    FitOptions opt;
    opt.range = std::make_pair(center - 20.0 * gamma_pred, center + 20.0 * gamma_pred);
    opt.reference = center;
    try {
        out.fit = fit_lorentzian(out.profile, center, gamma_pred, 1.0 / density, opt);
    } catch (const NumericError& e) {
        out.error = e.what();
    }
    return out;
}

}  // namespace

std::uint64_t state_seed(std::uint64_t master, std::uint64_t experiment, std::uint64_t index) {
    return derive_seed(derive_seed(master, Stream::experiment_seed, experiment), Stream::lorentzian_state, index);
}

Times make_times(const TimeGrid& grid, const ModelSpec& spec) {
    const double t_max = grid.t_max ? *grid.t_max : 2.0 * equilibration_time(spec);
    Times t;
    const std::size_t n = grid.n_samples;
    t.t.resize(n);
    for (std::size_t i = 0; i < n; ++i) t.t[i] = t_max * static_cast<double>(i) / static_cast<double>(n - 1);
    t.plateau_begin = (n - 1) / 2;
    return t;
}

std::vector<double> plateau_times(const ModelSpec& spec, std::size_t n) {
    const double t_eq = equilibration_time(spec);
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i)
        t[i] = t_eq * (1.0 + (n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.0));
    return t;
}

std::vector<std::size_t> nearest_levels(const ZeroOrderBasis& basis, int s, double energy, std::size_t count) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < basis.size(); ++i)
        if (basis.entries[i].s == s) idx.push_back(i);
    if (idx.size() < count) throw LookupError("not enough basis states on the requested level");
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(basis.entries[a].energy - energy) < std::abs(basis.entries[b].energy - energy);
    });
    idx.resize(count);
    return idx;
}

InitialCondition make_initial(const ZeroOrderBasis& basis, const ModelSpec& spec, const InitialSpec& init,
                              std::uint64_t seed, std::size_t rank) {
    const double target = init.energy ? *init.energy : spec.center_energy;
    InitialCondition ic;
    const std::size_t r = init.family == Family::basis_state ? rank : 0;
    ic.center_index = nearest_levels(basis, init.s, target, r + 1).back();
    ic.energy = basis.entries[ic.center_index].energy;
    ic.rho0 = bath_density(ic.energy - spec.system_energy(init.s), spec);
    ic.rho_f = total_density(ic.energy, spec);
    if (init.family == Family::lorentzian) {
        auto ls = build_lorentzian_state(basis, spec, init.s, ic.energy, init.gamma0, seed, init.deviates);
        ic.state = std::move(ls.state);
        ic.gamma0 = init.gamma0;
        ic.under_resolved = ls.under_resolved;
    } else {
        ic.state = basis_state_at(basis, ic.center_index);
        ic.gamma0 = 0.0;
    }
    return ic;
}

Simulation::Simulation(const ModelSpec& spec, std::size_t max_dimension) : spec_(spec) {
    Model model = build_hamiltonian(spec, max_dimension);
    basis_ = std::move(model.basis);
    derived_ = derive(spec);
    const auto t0 = std::chrono::steady_clock::now();
    spectrum_ = solve(model);
    diag_seconds_ = seconds_since(t0);
}

void Simulation::evolve(const std::vector<PureState>& states, const std::vector<double>& times,
                        const std::function<void(std::size_t, std::size_t, const Eigen::VectorXcd&)>& visit,
                        std::size_t jobs) const {
    if (states.empty() || times.empty()) return;
    const std::size_t per = std::max<std::size_t>(1, kColumnsPerBatch / times.size());
    const std::size_t n_groups = (states.size() + per - 1) / per;
    parallel_for(n_groups, jobs, [&](std::size_t g) {
        const std::size_t begin = g * per, end = std::min(states.size(), begin + per);
        std::vector<PureState> group(states.begin() + static_cast<std::ptrdiff_t>(begin),
                                     states.begin() + static_cast<std::ptrdiff_t>(end));
        std::vector<std::vector<double>> ts(group.size(), times);
        const Eigen::MatrixXcd out = propagate_batch(group, spectrum_, ts);
        Eigen::VectorXcd col;
        for (std::size_t i = 0; i < group.size(); ++i) {
            for (std::size_t q = 0; q < times.size(); ++q) {
                if (times[q] == 0.0) col = group[i].amplitudes;
                else col = out.col(static_cast<Eigen::Index>(i * times.size() + q));
                visit(begin + i, q, col);
            }
        }
    });
}

// --- run_single ---------------------------------------------------------------

RunResult run_single(const ExperimentConfig& config, const std::optional<fs::path>& out, const RunOptions& options) {
    const auto t0 = std::chrono::steady_clock::now();
    config.validate();
    std::optional<Simulation> own;
    const Simulation* sim = options.simulation;
    if (sim == nullptr || !(sim->spec() == config.model)) {
        own.emplace(config.model, config.max_dimension);
        sim = &*own;
    }
    const ModelSpec& spec = sim->spec();
    const ZeroOrderBasis& basis = sim->basis();

    RunResult r;
    r.config = config;
    r.derived = sim->derived();
    r.times = make_times(config.time, spec);
    const std::size_t n_t = r.times.t.size(), n_s = config.n_seeds;

    std::vector<InitialCondition> ics;
    std::vector<PureState> states;
    for (std::size_t i = 0; i < n_s; ++i) {
        const std::uint64_t seed = state_seed(spec.seed, kRunExperiment, i);
        r.seeds.push_back(seed);
        ics.push_back(make_initial(basis, spec, config.initial, seed, i));
        states.push_back(ics.back().state);
    }
    r.initial = ics.front();
    r.prediction = analytic::predict(r.initial.gamma0, r.initial.rho0, r.initial.rho_f, spec.coupling);

    r.series.assign(n_s, std::vector<EntropyBreakdown>(n_t));
    Eigen::VectorXd plateau_p = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis.size()));
    Eigen::VectorXd single_p;
    sim->evolve(states, r.times.t, [&](std::size_t i, std::size_t q, const Eigen::VectorXcd& c) {
        const Eigen::VectorXd p = c.cwiseAbs2();
        r.series[i][q] = split_entropy(p, basis, spec, r.times.t[q]);
        if (i == 0 && q >= r.times.plateau_begin) {
            plateau_p += p;
            if (q == r.times.plateau_begin) single_p = p;
        }
    }, options.jobs);
    plateau_p /= static_cast<double>(n_t - r.times.plateau_begin);

    std::vector<double> dsx;
    r.p_s_mean.assign(static_cast<std::size_t>(spec.n_levels), 0.0);
    std::size_t n_plateau = 0;
    for (std::size_t i = 0; i < n_s; ++i) {
        Accumulator acc;
        acc.initial = r.series[i][0];
        for (std::size_t q = r.times.plateau_begin; q < n_t; ++q) {
            acc.dsx.push_back(excess_entropy(acc.initial, r.series[i][q], spec.temperature));
            acc.s_final.push_back(r.series[i][q].S_univ);
            acc.p_s.push_back(r.series[i][q].p_s);
            for (std::size_t s = 0; s < r.p_s_mean.size(); ++s) r.p_s_mean[s] += r.series[i][q].p_s[s];
            ++n_plateau;
        }
        r.plateau.push_back(summarize(acc));
        dsx.push_back(r.plateau.back().dSx);
    }
    for (auto& x : r.p_s_mean) x /= static_cast<double>(n_plateau);
    const auto ms = mean_sem(dsx);
    r.dSx_mean = ms.mean;
    r.dSx_sem = ms.sem;

    // Profiles: the initial state over its own level, the final one over all
    // levels. A basis state's own entry is the return probability, not part
    // of the envelope, and is left out.
    const bool lor = config.initial.family == Family::lorentzian;
    const double gamma_f = r.prediction.gamma_f;
    const double W = spec.resolved_half_width();
    const std::size_t bins_f = config.n_bins ? *config.n_bins : default_bin_count(2 * W, gamma_f > 0 ? gamma_f : W / 25);
    const std::size_t bins_0 = config.n_bins ? *config.n_bins : (lor ? default_bin_count(2 * W, r.initial.gamma0) : bins_f);
    const Eigen::VectorXd p0 = r.initial.state.probabilities();
    auto init_pf = profile_and_fit(p0, basis, spec, config.initial.s, std::nullopt, r.initial.energy,
                                   r.initial.gamma0, r.initial.rho0, bins_0, lor);
    const std::optional<std::size_t> excl = lor ? std::nullopt : std::optional<std::size_t>(r.initial.center_index);
    const bool fit_final = gamma_f > 0;
    auto final_pf = profile_and_fit(plateau_p, basis, spec, std::nullopt, excl, r.initial.energy, gamma_f,
                                    r.initial.rho_f, bins_f, fit_final);
    ProfileFit single_pf;
    if (single_p.size() > 0)
        single_pf = profile_and_fit(single_p, basis, spec, std::nullopt, excl, r.initial.energy, gamma_f,
                                    r.initial.rho_f, bins_f, fit_final);
    r.initial_profile = init_pf.profile;
    r.final_profile = single_pf.profile;
    r.initial_fit = init_pf.fit;
    r.final_fit = final_pf.fit;
    if (!init_pf.error.empty()) r.fit_error = "initial: " + init_pf.error;
    if (!final_pf.error.empty()) r.fit_error += (r.fit_error.empty() ? "" : "; ") + std::string("final: ") + final_pf.error;
    r.wall_seconds = seconds_since(t0);

    if (!out) return r;

    // timeseries.csv: seed averages at each time.
    CsvTable ts({"t", "S_univ", "S_sys", "S_env", "F_sys", "Q_cum", "dSx"});
    for (std::size_t q = 0; q < n_t; ++q) {
        double su = 0, ss = 0, se = 0, f = 0, qc = 0, d = 0;
        for (std::size_t i = 0; i < n_s; ++i) {
            const auto& b = r.series[i][q];
            su += b.S_univ;
            ss += b.S_sys;
            se += b.S_env;
            f += b.F_sys;
            qc += heat(r.series[i][0], b);
            d += excess_entropy(r.series[i][0], b, spec.temperature);
        }
        const double n = static_cast<double>(n_s);
        ts.row({r.times.t[q], su / n, ss / n, se / n, f / n, qc / n, d / n});
    }
    const double rho0 = r.initial.rho0, rho_f = r.initial.rho_f, e0 = r.initial.energy, g0 = r.initial.gamma0;
    const int dof0 = config.initial.deviates == DeviateKind::real ? 1 : 2;
    const std::string prof_init = profile_csv(r.initial_profile, dof0, [&](double x) {
        return lor ? lorentzian_profile(x, e0, g0, 1.0 / rho0) : 0.0;
    });
    const std::string prof_final = profile_csv(r.final_profile, 2, [&](double x) {
        return gamma_f > 0 ? lorentzian_profile(x, e0, gamma_f, 1.0 / rho_f) : 0.0;
    });
    json fits = {
        {"initial", r.initial_fit ? json(*r.initial_fit) : json(nullptr)},
        {"final", r.final_fit ? json(*r.final_fit) : json(nullptr)},
        {"final_single_time", single_pf.fit ? json(*single_pf.fit) : json(nullptr)},
        {"final_profile", "plateau-averaged probabilities of seed 0"},
        {"excluded_index", excl ? json(*excl) : json(nullptr)},
        {"predicted", {{"gamma0", g0}, {"gamma_f", gamma_f}, {"gamma_eigen", analytic::eigenstate_width(spec.coupling, rho_f)}}},
        {"gamma_ratio", r.final_fit && gamma_f > 0 ? json(r.final_fit->gamma / gamma_f) : json(nullptr)},
        {"error", r.fit_error.empty() ? json(nullptr) : json(r.fit_error)},
    };
    CsvTable pred = prediction_table();
    add_prediction(pred, r.prediction);

    const fs::path dir = *out;
    write_atomic(dir / "timeseries.csv", ts.str());
    write_atomic(dir / "profile_initial.csv", prof_init);
    write_atomic(dir / "profile_final.csv", prof_final);
    write_atomic(dir / "fits.json", fits.dump(2) + "\n");
    write_atomic(dir / "predictions.csv", pred.str());
    json extra = {
        {"derived", r.derived},
        {"seeds", r.seeds},
        {"initial_energy", r.initial.energy},
        {"under_resolved", r.initial.under_resolved},
        {"dSx_plateau_mean", r.dSx_mean},
        {"dSx_plateau_sem", r.dSx_sem},
        {"p_s_plateau_mean", r.p_s_mean},
        {"diagonalization_seconds", sim->diagonalization_seconds()},
    };
    write_manifest(dir, "run", config, extra,
                   {"timeseries.csv", "profile_initial.csv", "profile_final.csv", "fits.json", "predictions.csv"},
                   seconds_since(t0));
    return r;
}

// --- run_entropy_curve --------------------------------------------------------

CurveResult run_entropy_curve(const ExperimentConfig& config, const std::optional<fs::path>& out,
                              const RunOptions& options) {
    const auto t0 = std::chrono::steady_clock::now();
    config.validate();
    if (config.curve.gamma0_rho0.empty()) throw ConfigError("curve.gamma0_rho0 must not be empty");
    CurveResult res;
    res.config = config;
    const std::size_t n_s = config.n_seeds;
    const auto& grid = config.curve.gamma0_rho0;
    res.points.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        res.points[i].family = "lorentzian";
        res.points[i].gamma0_rho0 = grid[i];
    }

    // Initial-state entropies on the static model.
    if (config.curve.static_model) {
        const ModelSpec& sm = *config.curve.static_model;
        const ZeroOrderBasis basis = build_basis(sm);
        parallel_for(grid.size(), options.jobs, [&](std::size_t i) {
            auto& pt = res.points[i];
            InitialSpec init = config.initial;
            init.family = Family::lorentzian;
            const auto probe = nearest_levels(basis, init.s, init.energy.value_or(sm.center_energy), 1).front();
            pt.static_rho0 = bath_density(basis.entries[probe].energy - sm.system_energy(init.s), sm);
            init.gamma0 = grid[i] / pt.static_rho0;
            pt.static_gamma0 = init.gamma0;
            std::vector<double> s;
            for (std::size_t k = 0; k < n_s; ++k) {
                const auto ic = make_initial(basis, sm, init, state_seed(sm.seed, kCurveStatic + i, k));
                s.push_back(entropy_univ(ic.state));
            }
            const auto ms = mean_sem(s);
            pt.has_static = true;
            pt.S_static = ms.mean;
            pt.S_static_sem = ms.sem;
            pt.S_static_pred = analytic::master_entropy(init.gamma0, pt.static_rho0);
        });
    }

    // Evolved points on the dynamics model.
    if (config.model.coupling > 0) {
        std::optional<Simulation> own;
        const Simulation* sim = options.simulation;
        if (sim == nullptr || !(sim->spec() == config.model)) {
            own.emplace(config.model, config.max_dimension);
            sim = &*own;
        }
        const ModelSpec& spec = sim->spec();
        const double W = spec.resolved_half_width();
        const auto times = plateau_times(spec);
        std::vector<PureState> states;
        std::vector<std::pair<std::size_t, InitialCondition>> owner;  // point index, condition
        for (std::size_t i = 0; i <= grid.size(); ++i) {
            InitialSpec init = config.initial;
            const bool basis_point = i == grid.size();
            init.family = basis_point ? Family::basis_state : Family::lorentzian;
            if (!basis_point) {
                const auto probe = nearest_levels(sim->basis(), init.s, init.energy.value_or(spec.center_energy), 1).front();
                const double rho0 = bath_density(sim->basis().entries[probe].energy - spec.system_energy(init.s), spec);
                init.gamma0 = grid[i] / rho0;
                if (init.gamma0 > config.curve.max_gamma_fraction * W) continue;
            }
            for (std::size_t k = 0; k < n_s; ++k) {
                auto ic = make_initial(sim->basis(), spec, init, state_seed(spec.seed, kCurveDynamics + i, k), k);
                states.push_back(ic.state);
                owner.emplace_back(i, std::move(ic));
            }
        }
        const auto summaries = plateau_run(*sim, states, times, options.jobs);
        CurvePoint basis_pt;
        basis_pt.family = "basis_state";
        std::vector<std::vector<double>> s_final(grid.size() + 1), s_init(grid.size() + 1);
        std::vector<std::vector<double>> dsx(grid.size() + 1);
        for (std::size_t k = 0; k < owner.size(); ++k) {
            const auto i = owner[k].first;
            const auto& ic = owner[k].second;
            CurvePoint& pt = i == grid.size() ? basis_pt : res.points[i];
            if (!pt.has_dynamics) {
                pt.has_dynamics = true;
                const auto p = analytic::predict(ic.gamma0, ic.rho0, ic.rho_f, spec.coupling);
                pt.gamma0 = ic.gamma0;
                pt.rho0 = ic.rho0;
                pt.rho_f = ic.rho_f;
                pt.gamma_f = p.gamma_f;
                pt.S_initial_pred = p.S_initial;
                pt.S_final_pred = p.S_final;
                pt.dSx_pred = p.dSx_pred;
                pt.regime = p.regime;
            }
            s_init[i].push_back(summaries[k].initial.S_univ);
            s_final[i].push_back(summaries[k].S_final);
            dsx[i].push_back(summaries[k].dSx);
        }
        for (std::size_t i = 0; i <= grid.size(); ++i) {
            CurvePoint& pt = i == grid.size() ? basis_pt : res.points[i];
            if (!pt.has_dynamics) continue;
            pt.S_initial = mean_sem(s_init[i]).mean;
            const auto f = mean_sem(s_final[i]);
            pt.S_final = f.mean;
            pt.S_final_sem = f.sem;
            const auto d = mean_sem(dsx[i]);
            pt.dSx = d.mean;
            pt.dSx_sem = d.sem;
            pt.dSx_samples = dsx[i];
        }
        if (basis_pt.has_dynamics) res.points.push_back(basis_pt);
    }
    res.wall_seconds = seconds_since(t0);
    if (!out) return res;

    auto cell = [](bool ok, double v) { return ok ? format_number(v) : std::string("nan"); };
    CsvTable t({"family", "gamma0_rho0", "gamma0", "rho0", "rho_f", "gamma_f", "S_initial_sim", "S_initial_pred",
                "S_final_sim", "S_final_sem", "S_final_pred", "dSx_sim", "dSx_sem", "dSx_pred", "regime",
                "static_rho0", "static_gamma0", "S_static_sim", "S_static_sem", "S_static_pred"});
    CsvTable pred = prediction_table();
    for (const auto& p : res.points) {
        const bool d = p.has_dynamics, s = p.has_static;
        t.row({p.family, format_number(p.gamma0_rho0), cell(d, p.gamma0), cell(d, p.rho0), cell(d, p.rho_f),
               cell(d, p.gamma_f), cell(d, p.S_initial), cell(d, p.S_initial_pred), cell(d, p.S_final),
               cell(d, p.S_final_sem), cell(d, p.S_final_pred), cell(d, p.dSx), cell(d, p.dSx_sem),
               cell(d, p.dSx_pred), d ? analytic::to_string(p.regime) : "nan", cell(s, p.static_rho0),
               cell(s, p.static_gamma0), cell(s, p.S_static), cell(s, p.S_static_sem), cell(s, p.S_static_pred)});
        if (d) add_prediction(pred, analytic::predict(p.gamma0, p.rho0, p.rho_f, config.model.coupling));
        if (s) add_prediction(pred, analytic::predict(p.static_gamma0, p.static_rho0,
                                                      total_density(config.curve.static_model->center_energy,
                                                                    *config.curve.static_model),
                                                      config.curve.static_model->coupling));
    }
    const fs::path dir = *out;
    write_atomic(dir / "curve.csv", t.str());
    write_atomic(dir / "predictions.csv", pred.str());
    json extra = {{"derived", derive(config.model)}, {"resolution_threshold", analytic::resolution_threshold()}};
    if (config.curve.static_model) extra["static_derived"] = {{"rho0", initial_density(*config.curve.static_model)}};
    write_manifest(dir, "curve", config, extra, {"curve.csv", "predictions.csv"}, seconds_since(t0));
    return res;
}

// --- run_limit_sweep ----------------------------------------------------------

ModelSpec sweep_step_spec(const ModelSpec& base, std::size_t step, std::optional<double> half_width) {
    ModelSpec s = base;
    const double f = std::ldexp(1.0, static_cast<int>(step));
    s.bath_prefactor = base.bath_prefactor * f;
    s.coupling = base.coupling / f;
    s.half_width = half_width ? half_width : base.half_width;
    return s;
}

SweepResult run_limit_sweep(const ExperimentConfig& config, const std::optional<fs::path>& out,
                            const RunOptions& options) {
    const auto t0 = std::chrono::steady_clock::now();
    config.validate();
    if (config.sweep.steps < 3) throw ConfigError("sweep.steps must be >= 3");
    if (config.initial.family != Family::lorentzian || !(config.initial.gamma0 > 0))
        throw ConfigError("the sweep needs a Lorentzian initial state with gamma0 > 0");
    if (!(config.model.coupling > 0)) throw ConfigError("the sweep needs coupling > 0");
    if (config.sweep.basis_states < 1) throw ConfigError("sweep.basis_states must be >= 1");
    SweepResult res;
    res.config = config;
    const auto boltz = boltzmann_distribution(config.model);
    const double base_w = config.model.resolved_half_width();
    for (std::size_t j = 0; j < config.sweep.steps; ++j) {
        SweepStep st;
        st.step = j;
        {
            ModelSpec spec = sweep_step_spec(config.model, j, config.sweep.lorentzian_half_width.value_or(base_w));
            spec.seed = state_seed(config.model.seed, kSweepLorentzian + j, 0);
            const Simulation sim(spec, config.max_dimension);
            st.k = spec.coupling;
            st.A = spec.bath_prefactor;
            st.N_lorentzian = sim.basis().size();
            std::vector<PureState> states;
            InitialCondition ic0;
            for (std::size_t k = 0; k < config.n_seeds; ++k) {
                auto ic = make_initial(sim.basis(), spec, config.initial, state_seed(spec.seed, kSweepLorentzian + j, k));
                states.push_back(ic.state);
                if (k == 0) ic0 = std::move(ic);
            }
            st.rho0 = ic0.rho0;
            st.rho_f = ic0.rho_f;
            st.gamma_spread = analytic::spreading_width(spec.coupling, ic0.rho_f);
            st.pred_lorentzian = analytic::master_excess(ic0.gamma0, ic0.rho0, ic0.rho_f, spec.coupling);
            const auto sum = plateau_run(sim, states, plateau_times(spec), options.jobs);
            std::vector<double> d;
            std::vector<double> ps(boltz.size(), 0.0);
            for (const auto& s : sum) {
                d.push_back(s.dSx);
                for (std::size_t q = 0; q < ps.size(); ++q) ps[q] += s.p_s[q] / static_cast<double>(sum.size());
            }
            const auto ms = mean_sem(d);
            st.dSx_lorentzian = ms.mean;
            st.sem_lorentzian = ms.sem;
            st.tv_lorentzian = total_variation(ps, boltz);
        }
        {
            const double w0 = config.sweep.basis_half_width.value_or(base_w);
            ModelSpec spec = sweep_step_spec(config.model, j, std::ldexp(w0, -static_cast<int>(j)));
            spec.seed = state_seed(config.model.seed, kSweepBasis + j, 0);
            const Simulation sim(spec, config.max_dimension);
            st.N_basis = sim.basis().size();
            InitialSpec init = config.initial;
            init.family = Family::basis_state;
            std::vector<PureState> states;
            InitialCondition ic0;
            for (std::size_t k = 0; k < config.sweep.basis_states; ++k) {
                auto ic = make_initial(sim.basis(), spec, init, 0, k);
                states.push_back(ic.state);
                if (k == 0) ic0 = std::move(ic);
            }
            st.pred_basis = analytic::master_excess(0.0, ic0.rho0, ic0.rho_f, spec.coupling);
            const auto sum = plateau_run(sim, states, plateau_times(spec), options.jobs);
            std::vector<double> d;
            std::vector<double> ps(boltz.size(), 0.0);
            for (const auto& s : sum) {
                d.push_back(s.dSx);
                for (std::size_t q = 0; q < ps.size(); ++q) ps[q] += s.p_s[q] / static_cast<double>(sum.size());
            }
            const auto ms = mean_sem(d);
            st.dSx_basis = ms.mean;
            st.sem_basis = ms.sem;
            st.tv_basis = total_variation(ps, boltz);
        }
        st.thermalized = st.tv_lorentzian <= 0.05 && st.tv_basis <= 0.05;
        res.steps.push_back(st);
    }
    res.wall_seconds = seconds_since(t0);
    if (!out) return res;

    CsvTable t({"step", "k", "A", "rho0", "rho_f", "gamma_spread", "N_lorentzian", "N_basis", "dSx_lorentzian",
                "sem_lorentzian", "pred_lorentzian", "dSx_basis", "sem_basis", "pred_basis", "tv_lorentzian",
                "tv_basis", "thermalized"});
    CsvTable pred = prediction_table();
    for (const auto& s : res.steps) {
        t.row({std::to_string(s.step), format_number(s.k), format_number(s.A), format_number(s.rho0),
               format_number(s.rho_f), format_number(s.gamma_spread), std::to_string(s.N_lorentzian),
               std::to_string(s.N_basis), format_number(s.dSx_lorentzian), format_number(s.sem_lorentzian),
               format_number(s.pred_lorentzian), format_number(s.dSx_basis), format_number(s.sem_basis),
               format_number(s.pred_basis), format_number(s.tv_lorentzian), format_number(s.tv_basis),
               s.thermalized ? "true" : "false"});
        add_prediction(pred, analytic::predict(config.initial.gamma0, s.rho0, s.rho_f, s.k));
        add_prediction(pred, analytic::predict(0.0, s.rho0, s.rho_f, s.k));
    }
    const fs::path dir = *out;
    write_atomic(dir / "sweep.csv", t.str());
    write_atomic(dir / "predictions.csv", pred.str());
    write_manifest(dir, "sweep", config, {{"derived", derive(config.model)}}, {"sweep.csv", "predictions.csv"},
                   seconds_since(t0));
    return res;
}

// --- misc ---------------------------------------------------------------------

json describe_model(const ModelSpec& spec) {
    const auto d = derive(spec);
    json j = {{"model", spec}, {"derived", d}};
    j["gamma_threshold"] = analytic::resolution_threshold() / d.rho0;
    if (spec.coupling > 0) {
        j["basis_state"] = analytic::predict(0.0, d.rho0, d.rho_f, spec.coupling);
        j["dS_classical"] = analytic::classical_delta_s(d.rho0, d.rho_f);
    }
    return j;
}

void write_manifest(const fs::path& dir, const std::string& command, const ExperimentConfig& config,
                    const json& extra, const std::vector<std::string>& files, double wall_seconds) {
    json digests = json::object();
    for (const auto& f : files) digests[f] = "fnv1a64:" + hex64(fnv1a64(read_text(dir / f)));
    json m = {
        {"qtherm_version", kVersion},
        {"command", command},
        {"config", config},
        {"outputs", digests},
        {"wall_clock_seconds", wall_seconds},
    };
    for (const auto& [k, v] : extra.items()) m[k] = v;
    write_atomic(dir / "manifest.json", m.dump(2) + "\n");
}

}  // namespace qtherm
