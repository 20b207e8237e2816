#include <cmath>
#include <set>

#include "qtherm/errors.hpp"
#include "qtherm/experiment.hpp"
#include "qtherm/io.hpp"

namespace qtherm {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& [key, _] : j.items())
        if (!allowed.contains(key)) throw ConfigError("unknown field '" + key + "' in " + where);
}

double number(const json& v, const std::string& what) {
    if (!v.is_number()) throw ConfigError(what + " must be a number");
    return v.get<double>();
}

std::size_t count(const json& v, const std::string& what) {
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
        throw ConfigError(what + " must be a non-negative integer");
    return v.get<std::size_t>();
}

std::optional<double> opt_number(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return number(j[key], where + "." + key);
}

json opt(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

std::string family_name(Family f) { return f == Family::lorentzian ? "lorentzian" : "basis_state"; }

}  // namespace

void ExperimentConfig::validate() const {
    model.validate();
    if (n_seeds < 1) throw ConfigError("n_seeds must be >= 1");
    if (time.n_samples < 2) throw ConfigError("time.n_samples must be >= 2");
    if (time.t_max && !(*time.t_max > 0)) throw ConfigError("time.t_max must be > 0");
    if (initial.s < 0 || initial.s >= model.n_levels) throw ConfigError("initial.s must name a system level");
    if (initial.family == Family::lorentzian && !(initial.gamma0 > 0))
        throw ConfigError("a Lorentzian initial state needs gamma0 > 0");
    if (n_bins && *n_bins < 10) throw ConfigError("n_bins must be >= 10");
    for (double g : curve.gamma0_rho0)
        if (!(g > 0)) throw ConfigError("curve.gamma0_rho0 entries must be > 0");
    if (curve.static_model) curve.static_model->validate();
    if (sweep.lorentzian_half_width && !(*sweep.lorentzian_half_width > 0))
        throw ConfigError("sweep.lorentzian_half_width must be > 0");
    if (sweep.basis_half_width && !(*sweep.basis_half_width > 0))
        throw ConfigError("sweep.basis_half_width must be > 0");
}

void to_json(json& j, const ExperimentConfig& c) {
    j = json{
        {"name", c.name},
        {"model", c.model},
        {"initial",
         {{"family", family_name(c.initial.family)},
          {"gamma0", c.initial.gamma0},
          {"s", c.initial.s},
          {"energy", opt(c.initial.energy)},
          {"deviates", c.initial.deviates == DeviateKind::complex ? "complex" : "real"}}},
        {"time", {{"t_max", opt(c.time.t_max)}, {"n_samples", c.time.n_samples}}},
        {"n_seeds", c.n_seeds},
        {"n_bins", c.n_bins ? json(*c.n_bins) : json(nullptr)},
        {"max_dimension", c.max_dimension},
        {"curve",
         {{"gamma0_rho0", c.curve.gamma0_rho0},
          {"static_model", c.curve.static_model ? json(*c.curve.static_model) : json(nullptr)},
          {"max_gamma_fraction", c.curve.max_gamma_fraction}}},
        {"sweep",
         {{"steps", c.sweep.steps},
          {"lorentzian_half_width", opt(c.sweep.lorentzian_half_width)},
          {"basis_half_width", opt(c.sweep.basis_half_width)},
          {"basis_states", c.sweep.basis_states}}},
    };
}

void from_json(const json& j, ExperimentConfig& c) {
    check_keys(j, {"name", "model", "initial", "time", "n_seeds", "n_bins", "max_dimension", "curve", "sweep"},
               "config");
    ExperimentConfig out;
    if (j.contains("name")) {
        if (!j["name"].is_string()) throw ConfigError("name must be a string");
        out.name = j["name"].get<std::string>();
    }
    if (j.contains("model")) from_json(j["model"], out.model);
    if (j.contains("initial")) {
        const auto& i = j["initial"];
        check_keys(i, {"family", "gamma0", "s", "energy", "deviates"}, "initial");
        if (i.contains("family")) {
            const auto f = i["family"].is_string() ? i["family"].get<std::string>() : "";
            if (f == "lorentzian") out.initial.family = Family::lorentzian;
            else if (f == "basis_state") out.initial.family = Family::basis_state;
            else throw ConfigError("initial.family must be 'lorentzian' or 'basis_state'");
        }
        if (i.contains("gamma0")) out.initial.gamma0 = number(i["gamma0"], "initial.gamma0");
        if (i.contains("s")) out.initial.s = static_cast<int>(count(i["s"], "initial.s"));
        out.initial.energy = opt_number(i, "energy", "initial");
        if (i.contains("deviates")) {
            const auto d = i["deviates"].is_string() ? i["deviates"].get<std::string>() : "";
            if (d == "complex") out.initial.deviates = DeviateKind::complex;
            else if (d == "real") out.initial.deviates = DeviateKind::real;
            else throw ConfigError("initial.deviates must be 'complex' or 'real'");
        }
    }
    if (j.contains("time")) {
        const auto& t = j["time"];
        check_keys(t, {"t_max", "n_samples"}, "time");
        out.time.t_max = opt_number(t, "t_max", "time");
        if (t.contains("n_samples")) out.time.n_samples = count(t["n_samples"], "time.n_samples");
    }
    if (j.contains("n_seeds")) out.n_seeds = count(j["n_seeds"], "n_seeds");
    if (j.contains("n_bins") && !j["n_bins"].is_null()) out.n_bins = count(j["n_bins"], "n_bins");
    if (j.contains("max_dimension")) out.max_dimension = count(j["max_dimension"], "max_dimension");
    if (j.contains("curve")) {
        const auto& cv = j["curve"];
        check_keys(cv, {"gamma0_rho0", "static_model", "max_gamma_fraction"}, "curve");
        if (cv.contains("gamma0_rho0")) {
            if (!cv["gamma0_rho0"].is_array()) throw ConfigError("curve.gamma0_rho0 must be an array");
            for (const auto& v : cv["gamma0_rho0"]) out.curve.gamma0_rho0.push_back(number(v, "curve.gamma0_rho0"));
        }
        if (cv.contains("static_model") && !cv["static_model"].is_null()) {
            ModelSpec m;
            from_json(cv["static_model"], m);
            out.curve.static_model = m;
        }
        if (cv.contains("max_gamma_fraction"))
            out.curve.max_gamma_fraction = number(cv["max_gamma_fraction"], "curve.max_gamma_fraction");
    }
    if (j.contains("sweep")) {
        const auto& sw = j["sweep"];
        check_keys(sw, {"steps", "lorentzian_half_width", "basis_half_width", "basis_states"}, "sweep");
        if (sw.contains("steps")) out.sweep.steps = count(sw["steps"], "sweep.steps");
        out.sweep.lorentzian_half_width = opt_number(sw, "lorentzian_half_width", "sweep");
        out.sweep.basis_half_width = opt_number(sw, "basis_half_width", "sweep");
        if (sw.contains("basis_states")) out.sweep.basis_states = count(sw["basis_states"], "sweep.basis_states");
    }
    c = out;
}

ExperimentConfig parse_config(const json& j) {
    ExperimentConfig c;
    if (j.is_object() && j.contains("config") && j.contains("qtherm_version")) from_json(j["config"], c);
    else from_json(j, c);
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        throw ConfigError("cannot parse " + path.string() + ": " + e.what());
    }
    return parse_config(j);
}

// --- presets ----------------------------------------------------------------

namespace {

// Desk-scale dynamics model: rho0 ~ 155, rho_f ~ 399 and a spreading width of
// 2 pi k^2 rho_f ~ 0.051, i.e. about 20 level spacings; N ~ 4400.
ModelSpec desk_model() {
    ModelSpec m;
    m.temperature = 6.22;
    m.bath_prefactor = 31.0;
    m.coupling = 0.0045;
    m.n_levels = 3;
    m.level_spacing = 1.0;
    m.center_energy = 10.0;
    m.half_width = 5.0;
    m.seed = 1;
    return m;
}

// Wide model without dynamics for initial-state entropies: rho0 ~ 1e4.
ModelSpec static_model() {
    ModelSpec m = desk_model();
    m.bath_prefactor = 2004.4;
    m.half_width = 3.0;
    return m;
}

std::vector<double> half_decades(double lo_exp, double hi_exp) {
    std::vector<double> v;
    for (int i = static_cast<int>(std::lround(2 * lo_exp)); i <= static_cast<int>(std::lround(2 * hi_exp)); ++i)
        v.push_back(std::pow(10.0, i / 2.0));
    return v;
}

}  // namespace

const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names = {"fig2", "fig3", "fig4", "fig5", "fig6", "desk-small"};
    return names;
}

ExperimentConfig preset(const std::string& name) {
    ExperimentConfig c;
    c.name = name;
    c.model = desk_model();
    if (name == "fig2") {
        c.initial.family = Family::lorentzian;
        c.initial.gamma0 = 0.15;  // about three spreading widths
        c.n_seeds = 5;
    } else if (name == "fig3") {
        c.initial.family = Family::basis_state;
        c.n_seeds = 1;
    } else if (name == "fig4") {
        c.curve.gamma0_rho0 = {0.001, 0.01, 0.03, 0.1, 0.3, 1, 3, 10, 30, 100, 300};
        c.curve.static_model = static_model();
        c.n_seeds = 5;
    } else if (name == "fig5") {
        c.curve.gamma0_rho0 = half_decades(-4, 2);
        c.n_seeds = 5;
    } else if (name == "fig6") {
        // Step 0: rho_f ~ 199, spreading ~ 0.050. The Lorentzian family keeps a
        // fixed window of 32 gamma0; the basis family a window of 100 spreading
        // widths, which shrinks with k so its dimension stays ~2000.
        c.model.bath_prefactor = 15.5;
        c.model.coupling = 0.0063;
        c.model.half_width = 2.0;
        c.initial.family = Family::lorentzian;
        c.initial.gamma0 = 0.0625;
        c.n_seeds = 32;
        c.sweep.steps = 4;
        c.sweep.lorentzian_half_width = 2.0;
        c.sweep.basis_half_width = 5.0;
        c.sweep.basis_states = 8;
    } else if (name == "desk-small") {
        c.model.bath_prefactor = 7.75;
        c.model.coupling = 0.009;
        c.model.half_width = 3.0;
        c.initial.family = Family::lorentzian;
        c.initial.gamma0 = 0.15;
        c.n_seeds = 2;
    } else {
        throw ConfigError("unknown preset '" + name + "'");
    }
    c.validate();
    return c;
}

}  // namespace qtherm
