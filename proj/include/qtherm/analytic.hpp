#pragma once

#include <numbers>
#include <string>

#include <json.hpp>

namespace qtherm::analytic {

inline constexpr double euler_gamma = std::numbers::egamma;
/// <|g|^2 ln |g|^2> for a unit complex Gaussian deviate, equal to 1 - gamma_EM.
inline constexpr double g0 = 1.0 - std::numbers::egamma;

inline double g0_constant() { return g0; }

/// Smallest gamma * rho for which the Lorentzian entropy is non-negative.
double resolution_threshold();

/// ln(4 pi gamma rho) - g0.
double lorentzian_entropy(double gamma, double rho);

/// Lorentzian entropy above the threshold, 0 below (and at gamma = 0).
double master_entropy(double gamma, double rho);
bool is_resolved(double gamma, double rho);

double spreading_width(double k, double rho_f);     // 2 pi k^2 rho_f
double eigenstate_width(double k, double rho);      // pi k^2 rho
double evolved_width(double k, double rho_f);       // 2 pi k^2 rho_f
double final_width(double gamma0, double k, double rho_f);

double classical_delta_s(double rho0, double rho_f);
/// ln(8 pi^2 k^2 rho_f rho0) - g0: excess production of an unresolved start.
double max_excess(double rho0, double rho_f, double k);
double master_excess(double gamma0, double rho0, double rho_f, double k);

enum class Regime { resolved, clamped };
std::string to_string(Regime r);

struct MasterPrediction {
    double gamma0, gamma_f, rho0, rho_f, k;
    double S_initial, S_final, dS_classical, dSx_pred, dSx_max;
    Regime regime;
};

MasterPrediction predict(double gamma0, double rho0, double rho_f, double k);
void to_json(nlohmann::json& j, const MasterPrediction& p);

}  // namespace qtherm::analytic
