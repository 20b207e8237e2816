#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qtherm/analytic.hpp"
#include "qtherm/model.hpp"
#include "qtherm/observables.hpp"
#include "qtherm/spectral.hpp"
#include "qtherm/states.hpp"
#include "qtherm/stats.hpp"

namespace qtherm {

inline constexpr const char* kVersion = "0.1.0";

enum class Family { lorentzian, basis_state };

struct InitialSpec {
    Family family = Family::basis_state;
    double gamma0 = 0.0;   // Lorentzian half-width
    int s = 0;             // system level carrying the initial state
    /// Target energy; the state is centered on the closest basis level of s.
    /// Defaults to the model's center energy.
    std::optional<double> energy;
    DeviateKind deviates = DeviateKind::complex;
};

/// Either an explicit [0, t_max] grid or, when t_max is unset, [0, 2 t_eq].
/// The second half of the grid is the equilibrium plateau.
struct TimeGrid {
    std::optional<double> t_max;
    std::size_t n_samples = 41;
};

struct CurveSettings {
    /// Values of gamma0 * rho0; each is converted with the relevant model's rho0.
    std::vector<double> gamma0_rho0;
    /// Wide model used only for initial-state entropies (no diagonalization).
    std::optional<ModelSpec> static_model;
    /// Dynamics points are skipped when gamma0 exceeds this fraction of the window.
    double max_gamma_fraction = 0.125;
};

struct SweepSettings {
    std::size_t steps = 5;
    /// Window of the Lorentzian family, fixed across steps (default: model's).
    std::optional<double> lorentzian_half_width;
    /// Window of the basis-state family at step 0, halved with each step.
    std::optional<double> basis_half_width;
    std::size_t basis_states = 8;
};

struct ExperimentConfig {
    std::string name = "run";
    ModelSpec model;
    InitialSpec initial;
    TimeGrid time;
    std::size_t n_seeds = 1;
    std::optional<std::size_t> n_bins;
    std::size_t max_dimension = kDefaultMaxDimension;
    CurveSettings curve;
    SweepSettings sweep;

    void validate() const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);
/// Accepts a bare config or a run manifest (uses its "config" member).
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Names accepted by preset(): fig2, fig3, fig4, fig5, fig6, desk-small.
const std::vector<std::string>& preset_names();
ExperimentConfig preset(const std::string& name);

/// Independent stream for (master seed, experiment id, seed index).
std::uint64_t state_seed(std::uint64_t master, std::uint64_t experiment, std::uint64_t index);

/// Grid of sample times and the index where the plateau begins.
struct Times {
    std::vector<double> t;
    std::size_t plateau_begin = 0;
};
Times make_times(const TimeGrid& grid, const ModelSpec& spec);
/// n samples evenly covering [t_eq, 2 t_eq].
std::vector<double> plateau_times(const ModelSpec& spec, std::size_t n = 21);

/// An initial state together with the densities and widths that predict it.
struct InitialCondition {
    PureState state;
    std::size_t center_index = 0;  // basis index of the center level
    double energy = 0;             // zero-order energy of that level
    double gamma0 = 0;
    double rho0 = 0;
    double rho_f = 0;
    bool under_resolved = false;
};

/// For the basis-state family, `rank` selects the rank-th closest level to
/// the target energy; Lorentzian states use `seed` instead.
InitialCondition make_initial(const ZeroOrderBasis& basis, const ModelSpec& spec, const InitialSpec& init,
                              std::uint64_t seed, std::size_t rank = 0);

/// Indices of the `count` basis states on level s closest to `energy`.
std::vector<std::size_t> nearest_levels(const ZeroOrderBasis& basis, int s, double energy, std::size_t count);

/// One diagonalized model, reusable across many initial states.
class Simulation {
public:
    explicit Simulation(const ModelSpec& spec, std::size_t max_dimension = kDefaultMaxDimension);

    const ModelSpec& spec() const { return spec_; }
    const ZeroOrderBasis& basis() const { return basis_; }
    const SpectralDecomposition& spectrum() const { return spectrum_; }
    const DerivedQuantities& derived() const { return derived_; }
    double diagonalization_seconds() const { return diag_seconds_; }

    /// Evolves each state over `times` and hands every amplitude column to
    /// `visit(state index, time index, amplitudes)`. Work is split over
    /// `jobs` threads; each (state, time) pair is visited exactly once.
    void evolve(const std::vector<PureState>& states, const std::vector<double>& times,
                const std::function<void(std::size_t, std::size_t, const Eigen::VectorXcd&)>& visit,
                std::size_t jobs = 1) const;

private:
    ModelSpec spec_;
    ZeroOrderBasis basis_;
    SpectralDecomposition spectrum_;
    DerivedQuantities derived_;
    double diag_seconds_ = 0;
};

/// Plateau-averaged quantities of one trajectory.
struct PlateauSummary {
    double dSx = 0;              // mean excess entropy over plateau samples
    double S_final = 0;          // mean final entropy
    std::vector<double> p_s;     // mean system distribution
    EntropyBreakdown initial;
};

struct RunResult {
    ExperimentConfig config;
    DerivedQuantities derived;
    analytic::MasterPrediction prediction;
    InitialCondition initial;  // seed 0
    Times times;
    std::vector<std::uint64_t> seeds;
    /// [seed][time]
    std::vector<std::vector<EntropyBreakdown>> series;
    std::vector<PlateauSummary> plateau;
    double dSx_mean = 0, dSx_sem = 0;
    std::vector<double> p_s_mean;
    BinnedProfile initial_profile, final_profile;
    std::optional<LorentzianFit> initial_fit, final_fit;
    std::string fit_error;
    double wall_seconds = 0;
};

struct RunOptions {
    std::size_t jobs = 1;
    /// Reuse an existing diagonalization of config.model.
    const Simulation* simulation = nullptr;
};

/// Runs one experiment; writes manifest.json, timeseries.csv,
/// profile_initial.csv, profile_final.csv, fits.json and predictions.csv
/// when `out` is set.
RunResult run_single(const ExperimentConfig& config, const std::optional<std::filesystem::path>& out,
                     const RunOptions& options = {});

struct CurvePoint {
    std::string family;  // "lorentzian" or "basis_state"
    double gamma0_rho0 = 0;
    // Initial entropies on the static model.
    bool has_static = false;
    double static_gamma0 = 0, static_rho0 = 0, S_static = 0, S_static_sem = 0, S_static_pred = 0;
    // Dynamics on the main model.
    bool has_dynamics = false;
    double gamma0 = 0, rho0 = 0, rho_f = 0, gamma_f = 0;
    double S_initial = 0, S_initial_pred = 0, S_final = 0, S_final_sem = 0, S_final_pred = 0;
    double dSx = 0, dSx_sem = 0, dSx_pred = 0;
    analytic::Regime regime = analytic::Regime::clamped;
    std::vector<double> dSx_samples;
};

struct CurveResult {
    ExperimentConfig config;
    std::vector<CurvePoint> points;
    double wall_seconds = 0;
};

/// Initial and evolved entropies and excess entropy over a gamma0 grid, plus
/// the evolved basis-state point (curve.csv, predictions.csv, manifest.json).
CurveResult run_entropy_curve(const ExperimentConfig& config, const std::optional<std::filesystem::path>& out,
                              const RunOptions& options = {});

struct SweepStep {
    std::size_t step = 0;
    double k = 0, A = 0, rho0 = 0, rho_f = 0, gamma_spread = 0;
    std::size_t N_lorentzian = 0, N_basis = 0;
    double dSx_lorentzian = 0, sem_lorentzian = 0, pred_lorentzian = 0;
    double dSx_basis = 0, sem_basis = 0, pred_basis = 0;
    /// Total variation of the plateau system distribution from Boltzmann.
    double tv_lorentzian = 0, tv_basis = 0;
    bool thermalized = false;
};

struct SweepResult {
    ExperimentConfig config;
    std::vector<SweepStep> steps;
    double wall_seconds = 0;
};

/// Halves k and doubles A at each step; measures the plateau excess entropy
/// of the Lorentzian family (gamma0 from config.initial) and of basis states.
SweepResult run_limit_sweep(const ExperimentConfig& config, const std::optional<std::filesystem::path>& out,
                            const RunOptions& options = {});

/// Spec with A and k rescaled for the given sweep step.
ModelSpec sweep_step_spec(const ModelSpec& base, std::size_t step, std::optional<double> half_width);

/// Model summary printed by `qtherm model`.
nlohmann::json describe_model(const ModelSpec& spec);

/// Writes manifest.json with the config echo and digests of `files` in dir.
void write_manifest(const std::filesystem::path& dir, const std::string& command, const ExperimentConfig& config,
                    const nlohmann::json& extra, const std::vector<std::string>& files, double wall_seconds);

}  // namespace qtherm
