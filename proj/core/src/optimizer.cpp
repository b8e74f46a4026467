#include "trendtune/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "trendtune/errors.hpp"

namespace trendtune {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double norm_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * 3.14159265358979323846);
}

// Maps between raw space and the unit cube the GP sees. Zero-width
// dimensions stay pinned at 0.5.
struct Scaler {
    const SearchSpace& space;

    std::vector<double> to_unit(std::span<const double> raw) const {
        std::vector<double> u(raw.size());
        for (std::size_t d = 0; d < raw.size(); ++d) {
            const SearchDimension& dim = space.dims[d];
            u[d] = dim.hi > dim.lo ? (raw[d] - dim.lo) / (dim.hi - dim.lo) : 0.5;
        }
        return u;
    }
    std::vector<double> to_raw(std::span<const double> unit) const {
        std::vector<double> r(unit.size());
        for (std::size_t d = 0; d < unit.size(); ++d) {
            const SearchDimension& dim = space.dims[d];
            r[d] = dim.lo + unit[d] * (dim.hi - dim.lo);
        }
        return r;
    }
};

}  // namespace

void validate_space(const SearchSpace& space) {
    if (space.dims.empty()) throw ValidationError("search space has no dimensions");
    for (const SearchDimension& d : space.dims) {
        if (!std::isfinite(d.lo) || !std::isfinite(d.hi) || d.lo > d.hi) {
            throw ValidationError("search dimension '" + d.name + "' has invalid bounds");
        }
    }
}

double expected_improvement(double mean, double variance, double best) {
    const double improvement = mean - best;
    if (variance <= 1e-18) return std::max(improvement, 0.0);
    const double sigma = std::sqrt(variance);
    const double z = improvement / sigma;
    return improvement * norm_cdf(z) + sigma * norm_pdf(z);
}

OptimizeResult optimize(const SearchSpace& space, const ObjectiveFn& objective, int budget,
                        std::uint64_t seed, const std::vector<std::vector<double>>& probes) {
    validate_space(space);
    if (budget < 1) throw DomainError("optimizer budget must be at least 1");
    const std::size_t dims = space.dims.size();
    for (const std::vector<double>& p : probes) {
        if (p.size() != dims) throw ValidationError("probe dimension mismatch");
        for (std::size_t d = 0; d < dims; ++d) {
            if (p[d] < space.dims[d].lo - 1e-12 || p[d] > space.dims[d].hi + 1e-12) {
                throw ValidationError("probe outside search bounds in dimension '" +
                                      space.dims[d].name + "'");
            }
        }
    }

    Rng rng(derive_seed(seed, "bo"));
    const Scaler scaler{space};

    OptimizeResult result;
    result.best_objective = -kInf;

    auto run_trial = [&](std::vector<double> raw) {
        double value = objective(raw);
        if (!std::isfinite(value)) value = -kInf;  // failed trial: kept in history, not in the GP
        Trial trial;
        trial.index = static_cast<int>(result.history.size());
        trial.point = std::move(raw);
        trial.objective = value;
        if (value > result.best_objective || result.history.empty()) {
            result.best_objective = value;
            result.best_point = trial.point;
        }
        result.history.push_back(std::move(trial));
    };

    for (const std::vector<double>& p : probes) {
        if (static_cast<int>(result.history.size()) >= budget) break;
        run_trial(p);
    }

    while (static_cast<int>(result.history.size()) < budget) {
        // Observations usable by the surrogate.
        std::vector<std::vector<double>> xs;
        std::vector<double> ys;
        for (const Trial& t : result.history) {
            if (std::isfinite(t.objective)) {
                xs.push_back(scaler.to_unit(t.point));
                ys.push_back(t.objective);
            }
        }

        if (xs.size() < 2) {
            // Not enough signal for a surrogate; explore uniformly.
            std::vector<double> u(dims);
            for (std::size_t d = 0; d < dims; ++d) u[d] = rng.uniform();
            run_trial(scaler.to_raw(u));
            continue;
        }

        GaussianProcess gp;
        gp.fit(xs, ys, rng);
        const double incumbent = *std::max_element(ys.begin(), ys.end());

        auto ei_at = [&](std::span<const double> u) {
            const GaussianProcess::Prediction p = gp.predict(u);
            return expected_improvement(p.mean, p.variance, incumbent);
        };

        // Global sweep with seeded uniform candidates.
        constexpr int kCandidates = 1024;
        std::vector<double> best_u(dims, 0.5);
        double best_ei = -1.0;
        std::vector<double> u(dims);
        for (int c = 0; c < kCandidates; ++c) {
            for (std::size_t d = 0; d < dims; ++d) u[d] = rng.uniform();
            const double ei = ei_at(u);
            if (ei > best_ei) {
                best_ei = ei;
                best_u = u;
            }
        }
        // Local refinement: shrinking Gaussian perturbations.
        for (double sigma : {0.1, 0.03, 0.01}) {
            for (int c = 0; c < 64; ++c) {
                for (std::size_t d = 0; d < dims; ++d) {
                    u[d] = std::clamp(best_u[d] + sigma * rng.normal(), 0.0, 1.0);
                }
                const double ei = ei_at(u);
                if (ei > best_ei) {
                    best_ei = ei;
                    best_u = u;
                }
            }
        }
        run_trial(scaler.to_raw(best_u));
    }
    return result;
}

}  // namespace trendtune
