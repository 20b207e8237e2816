#include <doctest.h>

#include <cstdlib>
#include <filesystem>

#include "qtherm/errors.hpp"
#include "qtherm/experiment.hpp"
#include "qtherm/io.hpp"

using namespace qtherm;
using doctest::Approx;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("qtherm-unit-" + name);
    fs::remove_all(p);
    return p;
}

ExperimentConfig tiny() {
    ExperimentConfig c = preset("desk-small");
    c.model.half_width = 1.5;
    c.initial.gamma0 = 0.1;
    return c;
}

}  // namespace

TEST_CASE("presets are valid and distinct") {
    for (const auto& name : preset_names()) {
        const auto c = preset(name);
        CHECK(c.name == name);
        CHECK_NOTHROW(c.validate());
    }
    CHECK_THROWS_AS(preset("fig7"), ConfigError);
    const auto d = derive(preset("fig3").model);
    CHECK(d.dimension >= 4000);
    CHECK(d.dimension <= 8000);
    CHECK(d.spreading * d.rho_f >= 5);
    CHECK(d.spreading * d.rho_f <= 50);
    CHECK(preset("fig6").initial.gamma0 == 0.0625);
    CHECK(preset("fig2").n_seeds == 5);
}

TEST_CASE("config JSON round trip") {
    for (const auto& name : preset_names()) {
        const auto c = preset(name);
        const nlohmann::json j = c;
        const auto back = parse_config(j);
        CHECK(nlohmann::json(back) == j);
    }
}

TEST_CASE("config rejects unknown or mistyped fields") {
    nlohmann::json j = preset("fig2");
    auto bad = j;
    bad["n_seed"] = 3;
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
    bad = j;
    bad["initial"]["famly"] = "lorentzian";
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
    bad = j;
    bad["initial"]["family"] = "gaussian";
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
    bad = j;
    bad["n_seeds"] = -1;
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
    bad = j;
    bad["n_seeds"] = 0;
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
    bad = j;
    bad["model"]["coupling"] = "strong";
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
    bad = j;
    bad["initial"]["s"] = 5;
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
    bad = j;
    bad["curve"]["gamma0_rho0"] = {1.0, -2.0};
    CHECK_THROWS_AS(parse_config(bad), ConfigError);

    const auto path = scratch("bad-json");
    fs::create_directories(path);
    write_atomic(path / "c.json", "{ not json");
    CHECK_THROWS_AS(load_config(path / "c.json"), ConfigError);
    CHECK_THROWS_AS(load_config(path / "missing.json"), ConfigError);
}

TEST_CASE("time grids") {
    const auto spec = preset("fig3").model;
    const auto t = make_times({}, spec);
    REQUIRE(t.t.size() == 41);
    CHECK(t.t.front() == 0.0);
    CHECK(t.t.back() == Approx(2 * equilibration_time(spec)));
    CHECK(t.t[t.plateau_begin] == Approx(equilibration_time(spec)));
    const auto p = plateau_times(spec);
    CHECK(p.size() == 21);
    CHECK(p.front() == Approx(equilibration_time(spec)));
    CHECK(p.back() == Approx(2 * equilibration_time(spec)));
    const auto fixed = make_times({50.0, 11}, spec);
    CHECK(fixed.t[10] == 50.0);
    CHECK(fixed.plateau_begin == 5);
}

TEST_CASE("per-experiment seeds are independent of evaluation order") {
    CHECK(state_seed(1, 3000, 0) != state_seed(1, 3001, 0));
    CHECK(state_seed(1, 3000, 0) != state_seed(1, 3000, 1));
    CHECK(state_seed(1, 3000, 0) != state_seed(2, 3000, 0));
    CHECK(state_seed(7, 1, 4) == state_seed(7, 1, 4));
}

TEST_CASE("nearest levels") {
    const auto basis = build_basis(tiny().model);
    const auto idx = nearest_levels(basis, 1, 10.0, 5);
    REQUIRE(idx.size() == 5);
    for (std::size_t i = 1; i < idx.size(); ++i)
        CHECK(std::abs(basis.entries[idx[i - 1]].energy - 10) <= std::abs(basis.entries[idx[i]].energy - 10));
    for (auto i : idx) CHECK(basis.entries[i].s == 1);
    CHECK_THROWS_AS(nearest_levels(basis, 0, 10.0, basis.size() + 1), LookupError);
}

TEST_CASE("decoupled run stays at zero entropy") {
    ExperimentConfig c = tiny();
    c.model.coupling = 0;
    c.initial.family = Family::basis_state;
    c.time.t_max = 100.0;
    c.time.n_samples = 11;
    const auto r = run_single(c, std::nullopt);
    for (const auto& b : r.series[0]) {
        CHECK(b.S_univ == 0.0);
        CHECK(b.p_s[0] == 1.0);
    }
    CHECK(r.dSx_mean == 0.0);
}

TEST_CASE("lorentzian run produces consistent outputs") {
    const auto dir = scratch("run");
    const auto r = run_single(tiny(), dir, {2, nullptr});
    for (const char* f : {"manifest.json", "timeseries.csv", "profile_initial.csv", "profile_final.csv", "fits.json",
                          "predictions.csv"})
        CHECK(fs::exists(dir / f));
    const auto m = nlohmann::json::parse(read_text(dir / "manifest.json"));
    CHECK(m["qtherm_version"] == kVersion);
    CHECK(m["outputs"]["timeseries.csv"] == "fnv1a64:" + hex64(fnv1a64(read_text(dir / "timeseries.csv"))));
    CHECK(r.series.size() == 2);
    // Norm and energy are conserved along the run: Q and <E_sys> stay bounded.
    double total = 0;
    for (double p : r.p_s_mean) total += p;
    CHECK(total == Approx(1.0).epsilon(1e-12));
    CHECK(r.series[0][0].S_univ > 0);
    CHECK(r.series[0].back().S_univ > r.series[0][0].S_univ);
}

TEST_CASE("manifest re-run and job count give identical CSV bytes") {
    const auto a = scratch("det-a"), b = scratch("det-b");
    run_single(tiny(), a, {1, nullptr});
    run_single(load_config(a / "manifest.json"), b, {3, nullptr});
    for (const char* f : {"timeseries.csv", "profile_initial.csv", "profile_final.csv", "predictions.csv"})
        CHECK(read_text(a / f) == read_text(b / f));
}

TEST_CASE("sweeps are independent of parallelism") {
    ExperimentConfig c = tiny();
    c.n_seeds = 2;
    c.sweep.steps = 3;
    c.sweep.basis_states = 2;
    c.sweep.lorentzian_half_width = 1.0;
    c.sweep.basis_half_width = 1.5;
    const auto a = scratch("sweep-a"), b = scratch("sweep-b");
    const auto r1 = run_limit_sweep(c, a, {1, nullptr});
    run_limit_sweep(c, b, {3, nullptr});
    CHECK(read_text(a / "sweep.csv") == read_text(b / "sweep.csv"));
    REQUIRE(r1.steps.size() == 3);
    for (std::size_t j = 1; j < 3; ++j) {
        CHECK(r1.steps[j].k == Approx(r1.steps[j - 1].k / 2));
        CHECK(r1.steps[j].A * r1.steps[j].k == Approx(r1.steps[0].A * r1.steps[0].k));
    }
    c.sweep.steps = 2;
    CHECK_THROWS_AS(run_limit_sweep(c, std::nullopt), ConfigError);
}

TEST_CASE("weak coupling never flags thermalization") {
    ExperimentConfig c = tiny();
    c.model.coupling = 1e-6;
    c.n_seeds = 1;
    c.sweep.steps = 3;
    c.sweep.basis_states = 1;
    c.sweep.lorentzian_half_width = 1.0;
    c.sweep.basis_half_width = 1.0;
    for (const auto& s : run_limit_sweep(c, std::nullopt).steps) CHECK_FALSE(s.thermalized);
}

TEST_CASE("curve covers both families") {
    ExperimentConfig c = tiny();
    c.curve.gamma0_rho0 = {0.01, 1.0, 20.0};
    c.n_seeds = 2;
    const auto dir = scratch("curve");
    const auto r = run_entropy_curve(c, dir);
    std::size_t basis_points = 0;
    for (const auto& p : r.points) {
        if (p.family == "basis_state") {
            ++basis_points;
            CHECK(p.has_dynamics);
            CHECK(p.S_initial == 0.0);
        }
    }
    CHECK(basis_points == 1);
    CHECK(fs::exists(dir / "curve.csv"));
    ExperimentConfig empty = c;
    empty.curve.gamma0_rho0.clear();
    CHECK_THROWS_AS(run_entropy_curve(empty, std::nullopt), ConfigError);
}

TEST_CASE("corrupted cache surfaces as an integrity error") {
    const auto dir = scratch("cache-run");
    fs::create_directories(dir);
    ExperimentConfig c = tiny();
    c.n_seeds = 1;
    setenv("QTHERM_CACHE_DIR", dir.c_str(), 1);
    run_single(c, std::nullopt);
    const fs::path file = cache_path(dir, spec_hash(c.model));
    REQUIRE(fs::exists(file));
    std::string bytes = read_text(file);
    bytes[bytes.size() - 20] ^= 0x7f;
    write_atomic(file, bytes);
    try {
        run_single(c, std::nullopt);
        FAIL("expected IntegrityError");
    } catch (const IntegrityError& e) {
        CHECK(e.exit_code() == ExitCode::numeric_error);
    }
    unsetenv("QTHERM_CACHE_DIR");
}

TEST_CASE("describe_model") {
    const auto j = describe_model(preset("fig3").model);
    CHECK(j["derived"]["dimension"].get<std::size_t>() == basis_dimension(preset("fig3").model));
    CHECK(j.contains("basis_state"));
}
