#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace qtherm {

/// Stream identifiers for deriving independent RNG streams from one seed.
enum class Stream : std::uint64_t {
    hamiltonian = 1,
    lorentzian_state = 2,
    experiment_seed = 3,
    monte_carlo = 4,
    synthetic = 5,
};

std::uint64_t splitmix64(std::uint64_t& state);

/// Mixes (master, stream, index) into a well-separated 64-bit seed.
std::uint64_t derive_seed(std::uint64_t master, Stream stream, std::uint64_t index = 0);

/// Seedable generator with platform-independent output.
///
/// The engine is std::mt19937_64, whose sequence is fixed by the standard.
/// Distributions are implemented here rather than with <random>'s
/// distribution classes, whose algorithms are implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    static Rng stream(std::uint64_t master, Stream stream, std::uint64_t index = 0) {
        return Rng(derive_seed(master, stream, index));
    }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on the open interval (0, 1) with 53 random bits.
    double uniform();

    /// Standard normal deviate (Marsaglia polar method).
    double normal();

    /// (g + i g') / sqrt(2) with g, g' standard normal, so E|z|^2 = 1.
    std::complex<double> complex_normal();

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace qtherm
