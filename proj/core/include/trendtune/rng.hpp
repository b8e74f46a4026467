#pragma once

#include <cstdint>
#include <span>
#include <string_view>

namespace trendtune {

// SplitMix64 generator. std:: engines and distributions are not required
// to produce identical streams across standard libraries, so everything
// that needs reproducible randomness goes through this class instead.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64();

    // Uniform double in [0, 1), 53 bits of entropy.
    double uniform();
    // Uniform double in [lo, hi).
    double uniform(double lo, double hi);
    // Uniform integer in [0, n). Rejection-sampled, so unbiased. n > 0.
    std::uint64_t uniform_int(std::uint64_t n);
    // Standard normal via Box-Muller. Consumes two uniforms per pair and
    // caches the spare, so draw order is still deterministic.
    double normal();
    // Index sampled from a discrete distribution by inverse CDF. Weights
    // must be non-negative; they are normalized internally.
    std::size_t sample_discrete(std::span<const double> weights);

private:
    std::uint64_t state_ = 0;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Stable child seed for a named pipeline stage. Derivation mixes the root
// seed with an FNV-1a hash of the stage name and a counter, so adding or
// reordering stages never disturbs the streams of existing ones.
std::uint64_t derive_seed(std::uint64_t root, std::string_view stage, std::uint64_t counter = 0);

}  // namespace trendtune
