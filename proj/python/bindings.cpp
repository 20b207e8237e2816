#include <optional>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qtherm/errors.hpp"
#include "qtherm/experiment.hpp"
#include "qtherm/verify.hpp"

namespace py = pybind11;
using nlohmann::json;
using namespace qtherm;

namespace {

// Dicts cross the boundary as JSON text; the Python side wraps json.dumps/loads.
ExperimentConfig config_from(const std::string& text) { return parse_config(json::parse(text)); }

std::optional<std::filesystem::path> out_path(const std::optional<std::string>& out) {
    if (!out) return std::nullopt;
    return std::filesystem::path(*out);
}

std::string run_json(const std::string& config, const std::optional<std::string>& out, std::size_t jobs) {
    py::gil_scoped_release release;
    const auto r = run_single(config_from(config), out_path(out), {jobs, nullptr});
    json series = json::array();
    for (std::size_t q = 0; q < r.times.t.size(); ++q) {
        double s = 0;
        for (const auto& seed : r.series) s += seed[q].S_univ;
        series.push_back(s / static_cast<double>(r.series.size()));
    }
    return json{{"derived", r.derived},
                {"prediction", r.prediction},
                {"t", r.times.t},
                {"plateau_begin", r.times.plateau_begin},
                {"S_univ", series},
                {"dSx_mean", r.dSx_mean},
                {"dSx_sem", r.dSx_sem},
                {"p_s_mean", r.p_s_mean},
                {"final_fit", r.final_fit ? json(*r.final_fit) : json(nullptr)},
                {"fit_error", r.fit_error}}
        .dump();
}

std::string curve_json(const std::string& config, const std::optional<std::string>& out, std::size_t jobs) {
    py::gil_scoped_release release;
    const auto r = run_entropy_curve(config_from(config), out_path(out), {jobs, nullptr});
    json pts = json::array();
    for (const auto& p : r.points)
        pts.push_back({{"family", p.family},
                       {"gamma0_rho0", p.gamma0_rho0},
                       {"S_static", p.has_static ? json(p.S_static) : json(nullptr)},
                       {"S_static_pred", p.has_static ? json(p.S_static_pred) : json(nullptr)},
                       {"dSx", p.has_dynamics ? json(p.dSx) : json(nullptr)},
                       {"dSx_pred", p.has_dynamics ? json(p.dSx_pred) : json(nullptr)},
                       {"regime", analytic::to_string(p.regime)}});
    return pts.dump();
}

std::string sweep_json(const std::string& config, const std::optional<std::string>& out, std::size_t jobs) {
    py::gil_scoped_release release;
    const auto r = run_limit_sweep(config_from(config), out_path(out), {jobs, nullptr});
    json steps = json::array();
    for (const auto& s : r.steps)
        steps.push_back({{"step", s.step},
                         {"k", s.k},
                         {"A", s.A},
                         {"dSx_lorentzian", s.dSx_lorentzian},
                         {"pred_lorentzian", s.pred_lorentzian},
                         {"dSx_basis", s.dSx_basis},
                         {"pred_basis", s.pred_basis},
                         {"thermalized", s.thermalized}});
    return steps.dump();
}

std::string verify_json(std::uint64_t seed, const std::vector<int>& only, std::size_t jobs) {
    py::gil_scoped_release release;
    VerifyOptions opt;
    opt.seed = seed;
    opt.only = only;
    opt.jobs = jobs;
    return verify(opt).to_json().dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Pure-state thermalization of a small system coupled to a bath";
    m.attr("__version__") = kVersion;

    auto config_error = py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_RuntimeError);
    (void)config_error;

    m.def("preset_names", &preset_names);
    m.def("preset_json", [](const std::string& name) { return json(preset(name)).dump(); });
    m.def("describe_model_json", [](const std::string& spec) {
        return describe_model(parse_model_spec(json::parse(spec))).dump();
    });
    m.def("boltzmann_json", [](const std::string& spec) {
        return boltzmann_distribution(parse_model_spec(json::parse(spec)));
    });
    m.def("run_json", &run_json, py::arg("config"), py::arg("out") = py::none(), py::arg("jobs") = 1);
    m.def("curve_json", &curve_json, py::arg("config"), py::arg("out") = py::none(), py::arg("jobs") = 1);
    m.def("sweep_json", &sweep_json, py::arg("config"), py::arg("out") = py::none(), py::arg("jobs") = 1);
    m.def("verify_json", &verify_json, py::arg("seed") = 1, py::arg("only") = std::vector<int>{},
          py::arg("jobs") = 1);

    m.def("shannon_entropy", [](const Eigen::VectorXd& p) { return shannon_entropy(p); });
    m.def("chi2_quartiles", &chi2_quartiles, py::arg("dof"));
    m.def("diagonalize", [](Eigen::MatrixXd h) {
        auto d = diagonalize(std::move(h));
        return py::make_tuple(d.energies, d.vectors);
    });
    m.def("g0_monte_carlo", &g0_monte_carlo, py::arg("seed"), py::arg("draws"));

    auto a = m.def_submodule("analytic", "Closed-form entropy and width predictions");
    a.attr("g0") = analytic::g0;
    a.def("resolution_threshold", &analytic::resolution_threshold);
    a.def("lorentzian_entropy", &analytic::lorentzian_entropy, py::arg("gamma"), py::arg("rho"));
    a.def("master_entropy", &analytic::master_entropy, py::arg("gamma"), py::arg("rho"));
    a.def("master_excess", &analytic::master_excess, py::arg("gamma0"), py::arg("rho0"), py::arg("rho_f"),
          py::arg("k"));
    a.def("max_excess", &analytic::max_excess, py::arg("rho0"), py::arg("rho_f"), py::arg("k"));
    a.def("spreading_width", &analytic::spreading_width, py::arg("k"), py::arg("rho_f"));
    a.def("eigenstate_width", &analytic::eigenstate_width, py::arg("k"), py::arg("rho"));
}
