#pragma once

#include <cstdint>
#include <random>

#include "pnp/image.hpp"

namespace pnp {

/// Seeded generator with platform-independent output.
///
/// The engine is std::mt19937_64, whose sequence is fixed by the standard.
/// All derived draws (uniform, normal, integer, Poisson) are computed here
/// from raw engine output instead of <random> distributions, whose algorithms
/// are implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() { return engine_(); }
    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, n), unbiased.
    std::uint64_t below(std::uint64_t n);
    /// Standard normal via Box-Muller.
    double normal();
    /// Poisson draw: Knuth's product method for mean < 30, transformed
    /// rejection (PTRS) otherwise.
    std::uint64_t poisson(double mean);

    ImageBuffer uniform_image(Shape shape, double lo = 0.0, double hi = 1.0);
    ImageBuffer normal_image(Shape shape, double sigma = 1.0);

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace pnp
