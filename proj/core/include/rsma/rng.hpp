#pragma once

// Portable seeded random streams.
//
// The standard distributions are implementation-defined, so uniform and
// Gaussian draws are built directly on the 64-bit Mersenne Twister output.
// Substreams are derived by hashing (seed, stream ids) with splitmix64, which
// makes record-level generation independent of evaluation order.

#include <complex>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace rsma {

std::uint64_t splitmix64(std::uint64_t x);

/// Mixes a base seed with any number of stream identifiers.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> ids);

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    Rng(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) : engine_(derive_seed(seed, ids)) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Standard normal (Box-Muller, cached second draw).
    double normal();
    /// Circularly symmetric complex Gaussian with E|x|^2 = variance.
    std::complex<double> complex_normal(double variance = 1.0);
    /// Uniform index in [0, n).
    std::uint64_t index(std::uint64_t n);

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace rsma
