#pragma once

#include <cstdint>
#include <string>

#include "qtherm/model.hpp"
#include "qtherm/spectral.hpp"

namespace qtherm {

/// L(E) = (1/pi) (gamma/rho) / ((E - center)^2 + gamma^2): expected |c|^2 of
/// one basis state at energy E for a Lorentzian envelope over density rho.
struct LorentzianWindow {
    double center;
    double gamma;
    double rho;

    double operator()(double energy) const;
};

enum class DeviateKind { complex, real };

struct LorentzianState {
    PureState state;
    LorentzianWindow window;
    /// Set when gamma * rho < 1: the envelope is narrower than one level.
    bool under_resolved = false;
};

/// Random superposition on system level s: amplitudes g * sqrt(L(E)) with g a
/// unit-variance deviate, truncated to the basis window and renormalized.
/// The density of the window is the bath density at `center - E_s`.
LorentzianState build_lorentzian_state(const ZeroOrderBasis& basis, const ModelSpec& spec, int s,
                                       double center, double gamma, std::uint64_t seed,
                                       DeviateKind kind = DeviateKind::complex);

/// The single product state |s>|eps>.
PureState build_basis_state(const ZeroOrderBasis& basis, int s, std::int64_t eps);
PureState basis_state_at(const ZeroOrderBasis& basis, std::size_t index);

/// Columns s, eps, E_zero, re, im.
std::string state_csv(const PureState& state, const ZeroOrderBasis& basis);

}  // namespace qtherm
