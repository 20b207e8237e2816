#include "qtherm/analytic.hpp"

#include <cmath>

#include "qtherm/errors.hpp"

namespace qtherm::analytic {

namespace {
constexpr double pi = std::numbers::pi;
}

double resolution_threshold() { return std::exp(g0) / (4.0 * pi); }

double lorentzian_entropy(double gamma, double rho) {
    if (!(gamma * rho > 0)) throw ConfigError("lorentzian_entropy requires gamma * rho > 0");
    return std::log(4.0 * pi * gamma * rho) - g0;
}

bool is_resolved(double gamma, double rho) {
    return gamma > 0 && gamma * rho >= resolution_threshold();
}

double master_entropy(double gamma, double rho) {
    return is_resolved(gamma, rho) ? lorentzian_entropy(gamma, rho) : 0.0;
}

double spreading_width(double k, double rho_f) { return 2.0 * pi * k * k * rho_f; }
double eigenstate_width(double k, double rho) { return pi * k * k * rho; }
double evolved_width(double k, double rho_f) { return spreading_width(k, rho_f); }
double final_width(double gamma0, double k, double rho_f) { return gamma0 + spreading_width(k, rho_f); }

double classical_delta_s(double rho0, double rho_f) { return std::log(rho_f / rho0); }

double max_excess(double rho0, double rho_f, double k) {
    return std::log(8.0 * pi * pi * k * k * rho_f * rho0) - g0;
}

double master_excess(double gamma0, double rho0, double rho_f, double k) {
    if (is_resolved(gamma0, rho0)) return std::log(final_width(gamma0, k, rho_f) / gamma0);
    return max_excess(rho0, rho_f, k);
}

std::string to_string(Regime r) { return r == Regime::resolved ? "resolved" : "clamped"; }

MasterPrediction predict(double gamma0, double rho0, double rho_f, double k) {
    MasterPrediction p{};
    p.gamma0 = gamma0;
    p.rho0 = rho0;
    p.rho_f = rho_f;
    p.k = k;
    p.gamma_f = final_width(gamma0, k, rho_f);
    p.regime = is_resolved(gamma0, rho0) ? Regime::resolved : Regime::clamped;
    p.S_initial = master_entropy(gamma0, rho0);
    p.S_final = master_entropy(p.gamma_f, rho_f);
    p.dS_classical = classical_delta_s(rho0, rho_f);
    p.dSx_max = max_excess(rho0, rho_f, k);
    p.dSx_pred = master_excess(gamma0, rho0, rho_f, k);
    return p;
}

void to_json(nlohmann::json& j, const MasterPrediction& p) {
    j = nlohmann::json{
        {"gamma0", p.gamma0},           {"gamma_f", p.gamma_f},     {"rho0", p.rho0},
        {"rho_f", p.rho_f},             {"k", p.k},                 {"S_pred_initial", p.S_initial},
        {"S_pred_final", p.S_final},    {"dS_classical", p.dS_classical},
        {"dSx_pred", p.dSx_pred},       {"dSx_max", p.dSx_max},     {"regime", to_string(p.regime)},
    };
}

}  // namespace qtherm::analytic
