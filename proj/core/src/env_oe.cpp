#include "trendtune/env_oe.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "trendtune/errors.hpp"

namespace trendtune {

void validate_task(const OrderTask& task) {
    if (task.price_path.empty()) throw ValidationError("order task needs a horizon of at least 1");
    if (!(task.target_quantity > 0.0)) {
        throw ValidationError("order task target quantity must be positive");
    }
    for (double p : task.price_path) {
        if (!(p > 0.0) || !std::isfinite(p)) {
            throw ValidationError("order path prices must be positive and finite");
        }
    }
    for (double p : task.history) {
        if (!(p > 0.0) || !std::isfinite(p)) {
            throw ValidationError("order history prices must be positive and finite");
        }
    }
}

double mean_price(const OrderTask& task) {
    validate_task(task);
    const double inv = 1.0 / static_cast<double>(task.horizon());
    double acc = 0.0;
    for (double p : task.price_path) acc += p * inv;
    return acc;
}

double oe_step_reward(OrderSide side, double price, double mean, double fraction, double alpha) {
    const double edge = price / mean - 1.0;
    const double profitability = side == OrderSide::sell ? fraction * edge : -fraction * edge;
    return profitability - alpha * fraction * fraction;
}

OEStepOutcome oe_step(const OrderTask& task, int step, double fraction, double remaining,
                      double alpha, double mean) {
    if (step < 1 || step > task.horizon()) {
        throw DomainError("oe_step: step " + std::to_string(step) + " outside horizon");
    }
    if (fraction < 0.0) throw DomainError("oe_step: negative fraction");
    // Slack of 1e-9 absorbs schedule rounding; real allocation bugs are
    // at least one grid unit (1/T) away.
    if (fraction > remaining + 1e-9) {
        throw DomainError("oe_step: allocation " + std::to_string(fraction) +
                          " exceeds remaining " + std::to_string(remaining));
    }
    OEStepOutcome out;
    out.step = step;
    out.fraction = fraction;
    out.executed_quantity = fraction * task.target_quantity;
    out.price = task.price_path[static_cast<std::size_t>(step - 1)];
    out.reward = oe_step_reward(task.side, out.price, mean, fraction, alpha);
    return out;
}

PolicyState oe_state(const OrderTask& task, int step, double remaining) {
    const int T = task.horizon();
    PolicyState s;
    s.key = task.order_id + "@" + std::to_string(step);
    s.features.resize(4);
    s.features[0] = static_cast<double>(step - 1) / static_cast<double>(T);
    s.features[1] = remaining;
    // Only prices from already-completed steps are visible.
    if (step >= 2) {
        const double last = task.price_path[static_cast<std::size_t>(step - 2)];
        const double first = task.price_path[0];
        s.features[2] = last / first - 1.0;
        if (step >= 3) {
            const double prev = task.price_path[static_cast<std::size_t>(step - 3)];
            s.features[3] = last / prev - 1.0;
        }
    }
    return s;
}

namespace {

MarketFeatures trend_features(const OrderTask& task, int step, const OEFeatureSpec& spec) {
    // Known prices ahead of step t: full history plus the first t−1 path
    // prices.
    std::vector<double> known(task.history);
    for (int i = 0; i + 1 < step; ++i) known.push_back(task.price_path[i]);
    if (known.size() < static_cast<std::size_t>(spec.window)) {
        throw EvalError("order '" + task.order_id + "': trend indicators need " +
                        std::to_string(spec.window) + " known prices before step " +
                        std::to_string(step) + ", have " + std::to_string(known.size()));
    }
    return market_features(known, known.size() - 1, spec.window, spec.normalize);
}

}  // namespace

OEEpisodeResult run_oe_episode(const OrderTask& task, const OEPolicyFn& policy,
                               const OEFeatureSpec& features, double gamma, double alpha,
                               Rng& rng) {
    validate_task(task);
    if (!(gamma >= 0.0) || gamma > 1.0) throw DomainError("gamma must lie in [0,1]");
    const int T = task.horizon();
    const double unit = 1.0 / static_cast<double>(T);

    OEEpisodeResult result;
    result.baseline_price = mean_price(task);
    int remaining_units = T;  // integer inventory in units of 1/T
    double discount = 1.0;

    for (int t = 1; t <= T; ++t) {
        const double remaining = static_cast<double>(remaining_units) * unit;
        int units = 0;
        if (t == T) {
            units = remaining_units;  // forced residual liquidation
        } else if (remaining_units > 0) {
            MarketFeatures mf;
            if (features.window > 0) mf = trend_features(task, t, features);
            const ActionDistribution dist = policy(oe_state(task, t, remaining), mf);
            if (static_cast<int>(dist.probs.size()) != T + 1) {
                throw ValidationError("order policy must emit T+1 action probabilities");
            }
            validate_distribution(dist);
            // Mask grid points beyond the remaining inventory, then sample.
            std::vector<double> masked(dist.probs.begin(),
                                       dist.probs.begin() + remaining_units + 1);
            units = static_cast<int>(rng.sample_discrete(masked));
        }
        const double fraction = static_cast<double>(units) * unit;
        OEStepOutcome step = oe_step(task, t, fraction, remaining, alpha, result.baseline_price);
        remaining_units -= units;
        result.achieved_price += fraction * step.price;
        result.total_fraction += fraction;
        result.discounted_return += discount * step.reward;
        discount *= gamma;
        result.steps.push_back(step);
    }
    return result;
}

OEEpisodeResult run_oe_schedule(const OrderTask& task, std::span<const double> fractions,
                                double gamma, double alpha) {
    validate_task(task);
    if (!(gamma >= 0.0) || gamma > 1.0) throw DomainError("gamma must lie in [0,1]");
    const int T = task.horizon();
    if (static_cast<int>(fractions.size()) != T) {
        throw ValidationError("schedule length must equal the order horizon");
    }
    double sum = 0.0;
    for (double f : fractions) {
        if (!std::isfinite(f) || f < 0.0) {
            throw ValidationError("schedule fractions must be finite and non-negative");
        }
        sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
        throw ValidationError("schedule fractions must sum to 1");
    }

    OEEpisodeResult result;
    result.baseline_price = mean_price(task);
    double remaining = 1.0;
    double discount = 1.0;
    for (int t = 1; t <= T; ++t) {
        const double fraction = fractions[static_cast<std::size_t>(t - 1)];
        OEStepOutcome step = oe_step(task, t, fraction, remaining, alpha, result.baseline_price);
        remaining -= fraction;
        result.achieved_price += fraction * step.price;
        result.total_fraction += fraction;
        result.discounted_return += discount * step.reward;
        discount *= gamma;
        result.steps.push_back(step);
    }
    return result;
}

}  // namespace trendtune
