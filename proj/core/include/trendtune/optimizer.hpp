#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "trendtune/gp.hpp"
#include "trendtune/rng.hpp"

namespace trendtune {

struct SearchDimension {
    std::string name;
    double lo = 0.0;
    double hi = 1.0;
};

struct SearchSpace {
    std::vector<SearchDimension> dims;
};

void validate_space(const SearchSpace& space);

struct Trial {
    int index = 0;
    std::vector<double> point;
    double objective = 0.0;  // −infinity marks a failed evaluation
};

struct OptimizeResult {
    std::vector<double> best_point;
    double best_objective = 0.0;
    std::vector<Trial> history;
};

using ObjectiveFn = std::function<double(std::span<const double>)>;

// Expected improvement of a Gaussian posterior (mean, variance) over the
// incumbent best (maximization).
double expected_improvement(double mean, double variance, double best);

// Sequential model-based maximization: the supplied probe points run
// first (they count against the budget), then each remaining trial fits
// a GP surrogate to all finite-valued observations and evaluates the
// candidate with the highest expected improvement, chosen from 1024
// seeded uniform candidates plus local refinement around the incumbent.
// Non-finite objective values are recorded as −infinity and excluded
// from the surrogate. Deterministic for a fixed seed.
OptimizeResult optimize(const SearchSpace& space, const ObjectiveFn& objective, int budget,
                        std::uint64_t seed, const std::vector<std::vector<double>>& probes = {});

}  // namespace trendtune
