#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace qtherm {

inline constexpr std::size_t kDefaultMaxDimension = 20000;

/// Physical and numerical parameters of the system + bath model.
///
/// Energies are in arbitrary units with k_B = hbar = 1. The bath has density
/// of states A * exp(E / T); the system has n_levels equally spaced levels.
struct ModelSpec {
    double temperature = 6.22;
    double bath_prefactor = 1415.3;
    double coupling = 0.9e-4;
    int n_levels = 3;
    double level_spacing = 1.0;
    double center_energy = 40.0;
    /// Unset means max(3, 50 * spreading width at the center energy).
    std::optional<double> half_width;
    std::uint64_t seed = 1;

    double system_energy(int s) const { return s * level_spacing; }
    double max_system_energy() const { return (n_levels - 1) * level_spacing; }
    double resolved_half_width() const;

    /// Throws ConfigError when an invariant is violated.
    void validate() const;

    bool operator==(const ModelSpec&) const = default;
};

void to_json(nlohmann::json& j, const ModelSpec& spec);
/// Rejects unknown fields and wrongly typed values with ConfigError.
void from_json(const nlohmann::json& j, ModelSpec& spec);
ModelSpec parse_model_spec(const nlohmann::json& j);

double bath_density(double energy, const ModelSpec& spec);
/// Sum of the bath density over all system levels; rho_f in the text below.
double total_density(double energy, const ModelSpec& spec);
/// Bath density seen by an initial state built on system level s.
double initial_density(const ModelSpec& spec, int s = 0);
/// Integrated bath level count between a and b.
double bath_count(double a, double b, const ModelSpec& spec);

/// Bath energies filling [E0 - W - E_smax, E0 + W] so that level n (1-based)
/// sits where the integrated density reaches n - 1/2.
std::vector<double> build_bath_levels(const ModelSpec& spec);

struct BasisEntry {
    int s;
    std::int64_t eps;  // index into the bath level list
    double energy;
};

/// Product states |s>|eps> with zero-order energy inside [E0 - W, E0 + W],
/// ordered by (energy, s, eps).
struct ZeroOrderBasis {
    std::vector<BasisEntry> entries;
    std::vector<double> bath_levels;
    int n_levels = 0;

    std::size_t size() const { return entries.size(); }
    /// Position of (s, eps) in the basis; throws LookupError when absent.
    std::size_t index_of(int s, std::int64_t eps) const;
    /// Index of the entry on level s whose energy is closest to `energy`.
    std::size_t nearest(int s, double energy) const;
    Eigen::VectorXd energies() const;
};

ZeroOrderBasis build_basis(const ModelSpec& spec);

/// Number of basis states without materializing the basis.
std::size_t basis_dimension(const ModelSpec& spec);

struct Model {
    ModelSpec spec;
    ZeroOrderBasis basis;
    Eigen::MatrixXd hamiltonian;
};

/// Zero-order energies on the diagonal plus k times a symmetric Gaussian
/// matrix with zero diagonal. The upper triangle is drawn row by row.
Model build_hamiltonian(const ModelSpec& spec, std::size_t max_dimension = kDefaultMaxDimension);

/// Quantities derived from a spec at its center energy.
struct DerivedQuantities {
    std::size_t dimension;
    double rho0;           // bath density on the s = 0 level at E0
    double rho_f;          // total density at E0
    double spreading;      // 2 pi k^2 rho_f
    double eigen_width;    // pi k^2 rho_f
    double half_width;
    double t_eq;           // 0 when k = 0
};

DerivedQuantities derive(const ModelSpec& spec);
void to_json(nlohmann::json& j, const DerivedQuantities& d);

}  // namespace qtherm
