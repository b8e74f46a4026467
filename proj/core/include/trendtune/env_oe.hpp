#pragma once

#include <functional>
#include <string>
#include <vector>

#include "trendtune/indicators.hpp"
#include "trendtune/policy.hpp"
#include "trendtune/rng.hpp"

namespace trendtune {

enum class OrderSide { sell, buy };

// A parent order to split across an intraday horizon. price_path holds
// the per-step execution prices p_1..p_T; history optionally holds
// prices preceding the horizon, so trend indicators have warm-up data
// without peeking forward.
struct OrderTask {
    std::string order_id;
    std::string asset_id;
    OrderSide side = OrderSide::sell;
    double target_quantity = 1.0;
    std::vector<double> price_path;
    std::vector<double> history;

    int horizon() const { return static_cast<int>(price_path.size()); }
};

void validate_task(const OrderTask& task);

// Mean market price over the horizon, accumulated as Σ p·(1/T) in path
// order so a uniform 1/T schedule reproduces it bit for bit.
double mean_price(const OrderTask& task);

struct OEStepOutcome {
    int step = 0;         // 1-based
    double fraction = 0;  // a_t, share of the parent order
    double executed_quantity = 0;
    double price = 0;
    double reward = 0;
};

// Reward of executing `fraction` of the order at `price`:
//   sell: fraction·(price/mean − 1) − alpha·fraction²
//   buy:  fraction·(1 − price/mean) − alpha·fraction²
// (buying below the mean price is the profitable direction).
double oe_step_reward(OrderSide side, double price, double mean, double fraction, double alpha);

// One execution step. `remaining` is the unallocated fraction; a
// fraction exceeding it (beyond rounding slack) is an allocation error.
OEStepOutcome oe_step(const OrderTask& task, int step, double fraction, double remaining,
                      double alpha, double mean);

struct OEEpisodeResult {
    std::vector<OEStepOutcome> steps;
    double discounted_return = 0.0;  // Σ γ^(t-1) R_t
    double achieved_price = 0.0;     // p_s = Σ a_t·p_t
    double total_fraction = 0.0;
    double baseline_price = 0.0;     // mean price of the task
};

// State for the policy ahead of step t (1-based): key "<order>@<t>",
// features [(t−1)/T, remaining, last-vs-first price, last return] — all
// observable before the step executes.
PolicyState oe_state(const OrderTask& task, int step, double remaining);

// Controls per-step trend labeling inside an episode. When window > 0
// the runner computes MarketFeatures over the trailing `window` known
// prices (history + already-executed steps) and hands them to the
// policy; the task must carry enough history.
struct OEFeatureSpec {
    int window = 0;  // 0 = no trend features
    bool normalize = false;
};

using OEPolicyFn = std::function<ActionDistribution(const PolicyState&, const MarketFeatures&)>;

// Runs one policy-driven episode. Actions live on the grid
// {0, 1/T, …, T/T}, capped by remaining inventory (infeasible grid
// points are masked out before sampling); the final step forcibly
// executes the residual so allocation always completes. The policy must
// emit T+1 action probabilities.
OEEpisodeResult run_oe_episode(const OrderTask& task, const OEPolicyFn& policy,
                               const OEFeatureSpec& features, double gamma, double alpha,
                               Rng& rng);

// Runs a fixed schedule (e.g. TWAP/VWAP) literally: fractions must have
// length T and sum to 1; no residual forcing is applied.
OEEpisodeResult run_oe_schedule(const OrderTask& task, std::span<const double> fractions,
                                double gamma, double alpha);

}  // namespace trendtune
