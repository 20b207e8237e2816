#include "qtherm/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "qtherm/errors.hpp"
#include "qtherm/rng.hpp"

namespace qtherm {

namespace {

const std::set<std::string> kSpecFields = {
    "temperature", "bath_prefactor", "coupling", "n_levels",
    "level_spacing", "center_energy", "half_width", "seed",
};

double read_number(const nlohmann::json& j, const char* key) {
    const auto& v = j.at(key);
    if (!v.is_number()) throw ConfigError(std::string("field '") + key + "' must be a number");
    return v.get<double>();
}

}  // namespace

double ModelSpec::resolved_half_width() const {
    if (half_width) return *half_width;
    const double spread = 2.0 * std::numbers::pi * coupling * coupling *
                          total_density(center_energy, *this);
    return std::max(3.0, 50.0 * spread);
}

void ModelSpec::validate() const {
    auto finite = [](double x) { return std::isfinite(x); };
    if (!finite(temperature) || temperature <= 0) throw ConfigError("temperature must be > 0");
    if (!finite(bath_prefactor) || bath_prefactor <= 0) throw ConfigError("bath_prefactor must be > 0");
    if (!finite(coupling) || coupling < 0) throw ConfigError("coupling must be >= 0");
    if (n_levels < 1) throw ConfigError("n_levels must be >= 1");
    if (!finite(level_spacing) || level_spacing <= 0) throw ConfigError("level_spacing must be > 0");
    if (!finite(center_energy)) throw ConfigError("center_energy must be finite");
    if (half_width && (!finite(*half_width) || *half_width <= 0))
        throw ConfigError("half_width must be > 0");
    // The lowest bath level needed is E0 - W - E_smax; keep it non-negative.
    const double low = center_energy - resolved_half_width() - max_system_energy();
    if (low < 0)
        throw ConfigError("center_energy - half_width - max system energy must be >= 0 (got " +
                          std::to_string(low) + ")");
}

void to_json(nlohmann::json& j, const ModelSpec& spec) {
    j = nlohmann::json{
        {"temperature", spec.temperature},
        {"bath_prefactor", spec.bath_prefactor},
        {"coupling", spec.coupling},
        {"n_levels", spec.n_levels},
        {"level_spacing", spec.level_spacing},
        {"center_energy", spec.center_energy},
        {"seed", spec.seed},
    };
    if (spec.half_width) j["half_width"] = *spec.half_width;
    else j["half_width"] = nullptr;
}

void from_json(const nlohmann::json& j, ModelSpec& spec) {
    if (!j.is_object()) throw ConfigError("model spec must be a JSON object");
    for (const auto& [key, _] : j.items())
        if (!kSpecFields.contains(key)) throw ConfigError("unknown model field '" + key + "'");
    ModelSpec out;
    if (j.contains("temperature")) out.temperature = read_number(j, "temperature");
    if (j.contains("bath_prefactor")) out.bath_prefactor = read_number(j, "bath_prefactor");
    if (j.contains("coupling")) out.coupling = read_number(j, "coupling");
    if (j.contains("n_levels")) {
        if (!j["n_levels"].is_number_integer()) throw ConfigError("n_levels must be an integer");
        out.n_levels = j["n_levels"].get<int>();
    }
    if (j.contains("level_spacing")) out.level_spacing = read_number(j, "level_spacing");
    if (j.contains("center_energy")) out.center_energy = read_number(j, "center_energy");
    if (j.contains("half_width") && !j["half_width"].is_null())
        out.half_width = read_number(j, "half_width");
    if (j.contains("seed")) {
        const auto& v = j["seed"];
        if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
            throw ConfigError("seed must be a non-negative integer");
        out.seed = v.get<std::uint64_t>();
    }
    spec = out;
}

ModelSpec parse_model_spec(const nlohmann::json& j) {
    ModelSpec spec;
    from_json(j, spec);
    spec.validate();
    return spec;
}

double bath_density(double energy, const ModelSpec& spec) {
    return spec.bath_prefactor * std::exp(energy / spec.temperature);
}

double total_density(double energy, const ModelSpec& spec) {
    if (energy - spec.max_system_energy() < 0)
        throw ConfigError("total_density requires E >= highest system level");
    double sum = 0.0;
    for (int s = 0; s < spec.n_levels; ++s) sum += bath_density(energy - spec.system_energy(s), spec);
    return sum;
}

double initial_density(const ModelSpec& spec, int s) {
    return bath_density(spec.center_energy - spec.system_energy(s), spec);
}

double bath_count(double a, double b, const ModelSpec& spec) {
    const double T = spec.temperature;
    return spec.bath_prefactor * T * (std::exp(b / T) - std::exp(a / T));
}

std::vector<double> build_bath_levels(const ModelSpec& spec) {
    const double W = spec.resolved_half_width();
    const double lo = spec.center_energy - W - spec.max_system_energy();
    const double hi = spec.center_energy + W;
    const double T = spec.temperature;
    const double total = bath_count(lo, hi, spec);
    if (!(total < 1e9)) throw ResourceError("bath level count is too large", static_cast<std::size_t>(-1));
    // N(E) = A T (exp(E/T) - exp(lo/T)) = n - 1/2 solved for E.
    const double scale = spec.bath_prefactor * T * std::exp(lo / T);
    const auto n_max = static_cast<std::int64_t>(std::floor(total + 0.5));
    std::vector<double> levels;
    levels.reserve(static_cast<std::size_t>(std::max<std::int64_t>(n_max, 0)));
    for (std::int64_t n = 1; n <= n_max; ++n) {
        const double e = lo + T * std::log1p((static_cast<double>(n) - 0.5) / scale);
        if (e > hi) break;
        levels.push_back(e);
    }
    if (levels.size() < 10)
        throw ConfigError("energy window holds fewer than 10 bath levels (" +
                          std::to_string(levels.size()) + ")");
    return levels;
}

std::size_t ZeroOrderBasis::index_of(int s, std::int64_t eps) const {
    for (std::size_t i = 0; i < entries.size(); ++i)
        if (entries[i].s == s && entries[i].eps == eps) return i;
    throw LookupError("basis state (s=" + std::to_string(s) + ", eps=" + std::to_string(eps) +
                      ") is outside the truncation window");
}

std::size_t ZeroOrderBasis::nearest(int s, double energy) const {
    std::size_t best = entries.size();
    double best_d = 0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].s != s) continue;
        const double d = std::abs(entries[i].energy - energy);
        if (best == entries.size() || d < best_d) {
            best = i;
            best_d = d;
        }
    }
    if (best == entries.size())
        throw LookupError("no basis state on system level " + std::to_string(s));
    return best;
}

Eigen::VectorXd ZeroOrderBasis::energies() const {
    Eigen::VectorXd e(static_cast<Eigen::Index>(entries.size()));
    for (std::size_t i = 0; i < entries.size(); ++i) e[static_cast<Eigen::Index>(i)] = entries[i].energy;
    return e;
}

ZeroOrderBasis build_basis(const ModelSpec& spec) {
    spec.validate();
    ZeroOrderBasis basis;
    basis.n_levels = spec.n_levels;
    basis.bath_levels = build_bath_levels(spec);
    const double W = spec.resolved_half_width();
    const double lo = spec.center_energy - W, hi = spec.center_energy + W;
    for (int s = 0; s < spec.n_levels; ++s) {
        const double es = spec.system_energy(s);
        for (std::size_t n = 0; n < basis.bath_levels.size(); ++n) {
            const double e = es + basis.bath_levels[n];
            if (e >= lo && e <= hi) basis.entries.push_back({s, static_cast<std::int64_t>(n), e});
        }
    }
    std::sort(basis.entries.begin(), basis.entries.end(), [](const BasisEntry& a, const BasisEntry& b) {
        if (a.energy != b.energy) return a.energy < b.energy;
        if (a.s != b.s) return a.s < b.s;
        return a.eps < b.eps;
    });
    return basis;
}

std::size_t basis_dimension(const ModelSpec& spec) {
    spec.validate();
    const auto levels = build_bath_levels(spec);
    const double W = spec.resolved_half_width();
    const double lo = spec.center_energy - W, hi = spec.center_energy + W;
    std::size_t n = 0;
    for (int s = 0; s < spec.n_levels; ++s) {
        const double es = spec.system_energy(s);
        for (double l : levels) n += (l + es >= lo && l + es <= hi);
    }
    return n;
}

Model build_hamiltonian(const ModelSpec& spec, std::size_t max_dimension) {
    Model model{spec, build_basis(spec), {}};
    const std::size_t N = model.basis.size();
    if (N > max_dimension)
        throw ResourceError("model dimension " + std::to_string(N) + " exceeds the cap of " +
                                std::to_string(max_dimension),
                            N);
    const auto n = static_cast<Eigen::Index>(N);
    Eigen::MatrixXd& H = model.hamiltonian;
    H.resize(n, n);
    Rng rng = Rng::stream(spec.seed, Stream::hamiltonian);
    const double k = spec.coupling;
    for (Eigen::Index i = 0; i < n; ++i) {
        H(i, i) = model.basis.entries[static_cast<std::size_t>(i)].energy;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double v = k * rng.normal();
            H(i, j) = v;
            H(j, i) = v;
        }
    }
    return model;
}

DerivedQuantities derive(const ModelSpec& spec) {
    spec.validate();
    DerivedQuantities d{};
    d.dimension = basis_dimension(spec);
    d.rho0 = initial_density(spec, 0);
    d.rho_f = total_density(spec.center_energy, spec);
    const double k2 = spec.coupling * spec.coupling;
    d.spreading = 2.0 * std::numbers::pi * k2 * d.rho_f;
    d.eigen_width = std::numbers::pi * k2 * d.rho_f;
    d.half_width = spec.resolved_half_width();
    d.t_eq = d.spreading > 0 ? 10.0 / d.spreading : 0.0;
    return d;
}

void to_json(nlohmann::json& j, const DerivedQuantities& d) {
    j = nlohmann::json{
        {"dimension", d.dimension}, {"rho0", d.rho0},     {"rho_f", d.rho_f},
        {"gamma_spread", d.spreading}, {"gamma_eigen", d.eigen_width},
        {"half_width", d.half_width}, {"t_eq", d.t_eq},
    };
}

}  // namespace qtherm
