#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "trendtune/env_oe.hpp"
#include "trendtune/env_st.hpp"
#include "trendtune/optimizer.hpp"
#include "trendtune/policy.hpp"
#include "trendtune/sketch.hpp"

namespace trendtune {

// Raw-space bounds for every threshold hole.
struct ThresholdBounds {
    std::vector<double> lo;
    std::vector<double> hi;
};

// Bounds each threshold hole by percentiles of its clause's indicator
// over the training window, so the search space tracks the data's
// scale. Degenerate indicators (constant) get a widened band.
ThresholdBounds threshold_bounds_from_features(const SketchTemplate& tmpl,
                                               std::span<const MarketFeatures> train_features,
                                               double lo_percentile = 0.01,
                                               double hi_percentile = 0.99);

// Encodes sketch parameters into a box-bounded search vector:
// thresholds raw, temperatures in log-space over [0.1, 10], ensemble
// weights as k−1 stick-breaking coordinates per trend (the simplex
// constraint holds exactly by construction).
class SketchSpace {
public:
    SketchSpace(SketchTemplate tmpl, ThresholdBounds bounds, double temp_lo = 0.1,
                double temp_hi = 10.0);

    const SearchSpace& space() const { return space_; }
    const SketchTemplate& sketch() const { return tmpl_; }

    SketchParams decode(std::span<const double> point) const;
    std::vector<double> encode(const SketchParams& params) const;

    // Fixed initial trials: the identity point (thresholds at bound
    // midpoints; all temperatures 1 / uniform weights), plus one
    // all-trends-one-hot point per sub-policy in ensemble mode.
    std::vector<SketchParams> probe_params() const;

private:
    SketchTemplate tmpl_;
    ThresholdBounds bounds_;
    double temp_lo_;
    double temp_hi_;
    SearchSpace space_;
};

struct FitResult {
    SketchParams best;
    double best_objective = 0.0;
    std::vector<Trial> history;
};

// Bayesian-optimizes the sketch parameters against the objective.
// Probes run first and count toward the budget, which guarantees the
// fitted parameters never score below identity tuning (or any single
// sub-policy) on the objective.
FitResult fit_sketch(const SketchSpace& space,
                     const std::function<double(const SketchParams&)>& objective, int budget,
                     std::uint64_t seed);

// Mean discounted episode return of the tuned policy across validation
// orders. Sampling is seeded per order, so the value is deterministic.
double evaluate_oe_objective(const std::vector<OrderTask>& orders, const TunedPolicy& policy,
                             const OEFeatureSpec& features, double gamma, double alpha,
                             std::uint64_t seed);

// Sharpe ratio of the tuned policy's validation equity curve; NaN when
// the curve has zero return volatility (the optimizer records such
// trials as failures).
double evaluate_st_objective(const StMarket& market, const TimeRange& window,
                             const StRunConfig& config, const TunedPolicy& policy,
                             std::uint64_t seed);

// Trend indicators for every in-window bar of the index series; used to
// derive threshold bounds from a training window.
std::vector<MarketFeatures> collect_market_features(const StMarket& market,
                                                    const TimeRange& window, int g,
                                                    bool normalize);

// Same, over the known-price prefix of each order (history + path).
std::vector<MarketFeatures> collect_order_features(const std::vector<OrderTask>& orders, int g,
                                                   bool normalize);

// Per-trial audit log: index, encoded point, objective.
void write_trial_history(const SearchSpace& space, std::span<const Trial> history,
                         const std::string& path);

}  // namespace trendtune
