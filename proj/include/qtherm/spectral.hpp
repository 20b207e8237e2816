#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qtherm/model.hpp"

namespace qtherm {

/// Eigenvalues in ascending order; column xi of `vectors` is eigenvector xi
/// expressed in the zero-order basis.
struct SpectralDecomposition {
    Eigen::VectorXd energies;
    Eigen::MatrixXd vectors;

    Eigen::Index size() const { return energies.size(); }
};

/// Complex amplitudes over the zero-order basis at time t.
struct PureState {
    Eigen::VectorXcd amplitudes;
    double t = 0.0;

    Eigen::VectorXd probabilities() const { return amplitudes.cwiseAbs2(); }
};

/// Dense symmetric eigendecomposition; the input matrix is consumed.
SpectralDecomposition diagonalize(Eigen::MatrixXd H);

/// Evolves state0 by exp(-iHt) using the eigenbasis.
PureState propagate(const PureState& state0, const SpectralDecomposition& decomp, double t);

/// Columns are the state at each requested time (measured from state0.t).
/// Overlaps with the eigenbasis are computed once and the times batched.
Eigen::MatrixXcd propagate_many(const PureState& state0, const SpectralDecomposition& decomp,
                                const std::vector<double>& times);

/// Several initial states, each with its own time list, evolved in one pass.
/// Output column blocks follow the order of `states` and `times`.
Eigen::MatrixXcd propagate_batch(const std::vector<PureState>& states,
                                 const SpectralDecomposition& decomp,
                                 const std::vector<std::vector<double>>& times);

/// Expectation value <psi|H|psi> given the spectral decomposition.
double energy_expectation(const PureState& state, const SpectralDecomposition& decomp);

/// C divided by the spreading width 2 pi k^2 rho_f at the center energy.
double equilibration_time(const ModelSpec& spec, double factor = 10.0);

/// Squared coefficients of eigenvector xi paired with the zero-order energies.
std::vector<std::pair<double, double>> eigenstate_envelope(const SpectralDecomposition& decomp,
                                                           const ZeroOrderBasis& basis,
                                                           Eigen::Index xi);

// --- binary cache -----------------------------------------------------------

/// FNV-1a 64-bit hash of a byte string.
std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t h = 0xcbf29ce484222325ULL);
inline std::uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

/// Content hash of the canonical spec serialization, seed included.
std::uint64_t spec_hash(const ModelSpec& spec);

void save_spectral_cache(const std::filesystem::path& path, const SpectralDecomposition& decomp,
                         std::uint64_t hash);
/// Throws IntegrityError for a malformed file, a checksum mismatch, or a
/// hash that differs from `expected_hash`.
SpectralDecomposition load_spectral_cache(const std::filesystem::path& path, std::uint64_t expected_hash);

/// Directory from QTHERM_CACHE_DIR, if set and non-empty.
std::optional<std::filesystem::path> cache_directory();
std::filesystem::path cache_path(const std::filesystem::path& dir, std::uint64_t hash);

/// Diagonalizes model.hamiltonian (consuming it), going through the cache
/// directory when one is configured.
SpectralDecomposition solve(Model& model);

}  // namespace qtherm
