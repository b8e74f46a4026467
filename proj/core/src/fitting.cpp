#include "trendtune/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <utility>

#include "trendtune/errors.hpp"
#include "trendtune/metrics.hpp"
#include "trendtune/rng.hpp"

namespace trendtune {

namespace {

double indicator_value(const MarketFeatures& f, SketchIndicator ind) {
    switch (ind) {
        case SketchIndicator::vol:
            return f.vol;
        case SketchIndicator::dr:
            return f.dr;
        case SketchIndicator::gr:
            return f.gr;
    }
    throw DomainError("unknown sketch indicator");
}

// Linear-interpolated percentile of an unsorted sample, p in [0, 1].
double percentile(std::vector<double> values, double p) {
    if (values.empty()) throw DomainError("percentile of empty sample");
    std::sort(values.begin(), values.end());
    const double rank = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    const auto hi = static_cast<std::size_t>(std::ceil(rank));
    if (lo == hi) return values[lo];
    const double frac = rank - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

std::string format_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

ThresholdBounds threshold_bounds_from_features(const SketchTemplate& tmpl,
                                               std::span<const MarketFeatures> train_features,
                                               double lo_percentile, double hi_percentile) {
    if (train_features.empty())
        throw DomainError("threshold bounds need at least one training feature sample");
    if (!(lo_percentile >= 0.0 && hi_percentile <= 1.0 && lo_percentile <= hi_percentile))
        throw DomainError("threshold bound percentiles must satisfy 0 <= lo <= hi <= 1");

    // Which indicator each threshold hole compares against.
    std::vector<SketchIndicator> hole_indicator(tmpl.threshold_count(), SketchIndicator::vol);
    for (const auto& cond : tmpl.conditionals())
        for (const auto& clause : cond.clauses) hole_indicator[clause.hole] = clause.indicator;

    ThresholdBounds bounds;
    bounds.lo.resize(tmpl.threshold_count());
    bounds.hi.resize(tmpl.threshold_count());
    for (int h = 0; h < tmpl.threshold_count(); ++h) {
        std::vector<double> values;
        values.reserve(train_features.size());
        for (const auto& f : train_features) values.push_back(indicator_value(f, hole_indicator[h]));
        double lo = percentile(values, lo_percentile);
        double hi = percentile(values, hi_percentile);
        if (hi - lo <= 0.0) {
            // Constant indicator: widen so a strict comparator can sit on
            // either side of the observed value.
            const double pad = std::max(1e-6, 0.5 * std::abs(lo));
            lo -= pad;
            hi += pad;
        }
        bounds.lo[h] = lo;
        bounds.hi[h] = hi;
    }
    return bounds;
}

SketchSpace::SketchSpace(SketchTemplate tmpl, ThresholdBounds bounds, double temp_lo,
                         double temp_hi)
    : tmpl_(std::move(tmpl)), bounds_(std::move(bounds)), temp_lo_(temp_lo), temp_hi_(temp_hi) {
    if (static_cast<int>(bounds_.lo.size()) != tmpl_.threshold_count() ||
        static_cast<int>(bounds_.hi.size()) != tmpl_.threshold_count())
        throw ValidationError("threshold bounds do not match the sketch's hole count");
    for (int h = 0; h < tmpl_.threshold_count(); ++h) {
        if (!std::isfinite(bounds_.lo[h]) || !std::isfinite(bounds_.hi[h]) ||
            bounds_.lo[h] > bounds_.hi[h])
            throw ValidationError("threshold bounds must be finite with lo <= hi");
        space_.dims.push_back(
            {"threshold_" + std::to_string(h), bounds_.lo[h], bounds_.hi[h]});
    }
    if (!(temp_lo_ > 0.0) || !(temp_hi_ >= temp_lo_) || !std::isfinite(temp_hi_))
        throw ValidationError("temperature range must be finite and positive with lo <= hi");
    for (const auto& cond : tmpl_.conditionals()) {
        const std::string trend{to_string(cond.trend)};
        if (tmpl_.mode().kind == SketchMode::Kind::single) {
            space_.dims.push_back({"log_phi_" + trend, std::log(temp_lo_), std::log(temp_hi_)});
        } else {
            // k−1 stick-breaking coordinates; the k-th weight is the
            // remainder, so every decoded point lies on the simplex.
            for (int j = 0; j + 1 < tmpl_.mode().ensemble_size; ++j)
                space_.dims.push_back({"w_" + trend + "_" + std::to_string(j), 0.0, 1.0});
        }
    }
    validate_space(space_);
}

SketchParams SketchSpace::decode(std::span<const double> point) const {
    if (point.size() != space_.dims.size())
        throw DomainError("search point width does not match the sketch space");
    SketchParams params;
    params.thresholds.assign(point.begin(), point.begin() + tmpl_.threshold_count());
    params.directives.resize(static_cast<std::size_t>(tmpl_.directive_count()));
    std::size_t idx = static_cast<std::size_t>(tmpl_.threshold_count());
    for (const auto& cond : tmpl_.conditionals()) {
        auto& payload = params.directives[static_cast<std::size_t>(cond.directive_hole)];
        if (tmpl_.mode().kind == SketchMode::Kind::single) {
            payload = {std::exp(point[idx++])};
        } else {
            const int k = tmpl_.mode().ensemble_size;
            payload.assign(static_cast<std::size_t>(k), 0.0);
            double remaining = 1.0;
            for (int j = 0; j + 1 < k; ++j) {
                const double c = std::clamp(point[idx++], 0.0, 1.0);
                const double w = c * remaining;
                payload[static_cast<std::size_t>(j)] = w;
                remaining = std::max(0.0, remaining - w);
            }
            payload[static_cast<std::size_t>(k - 1)] = remaining;
        }
    }
    validate_params(tmpl_, params);
    return params;
}

std::vector<double> SketchSpace::encode(const SketchParams& params) const {
    validate_params(tmpl_, params);
    std::vector<double> point;
    point.reserve(space_.dims.size());
    for (int h = 0; h < tmpl_.threshold_count(); ++h)
        point.push_back(
            std::clamp(params.thresholds[static_cast<std::size_t>(h)], bounds_.lo[h], bounds_.hi[h]));
    for (const auto& cond : tmpl_.conditionals()) {
        const auto& payload = params.directives[static_cast<std::size_t>(cond.directive_hole)];
        if (tmpl_.mode().kind == SketchMode::Kind::single) {
            point.push_back(std::clamp(std::log(payload[0]), std::log(temp_lo_), std::log(temp_hi_)));
        } else {
            const int k = tmpl_.mode().ensemble_size;
            double remaining = 1.0;
            for (int j = 0; j + 1 < k; ++j) {
                const double w = payload[static_cast<std::size_t>(j)];
                const double c = remaining > 0.0 ? std::clamp(w / remaining, 0.0, 1.0) : 0.0;
                point.push_back(c);
                remaining = std::max(0.0, remaining - w);
            }
        }
    }
    return point;
}

std::vector<SketchParams> SketchSpace::probe_params() const {
    SketchParams identity;
    identity.thresholds.resize(static_cast<std::size_t>(tmpl_.threshold_count()));
    for (int h = 0; h < tmpl_.threshold_count(); ++h)
        identity.thresholds[static_cast<std::size_t>(h)] =
            bounds_.lo[h] + 0.5 * (bounds_.hi[h] - bounds_.lo[h]);
    identity.directives.resize(static_cast<std::size_t>(tmpl_.directive_count()));
    const int width = tmpl_.mode().directive_width();
    for (auto& payload : identity.directives) {
        if (tmpl_.mode().kind == SketchMode::Kind::single)
            payload = {std::clamp(1.0, temp_lo_, temp_hi_)};
        else
            payload.assign(static_cast<std::size_t>(width), 1.0 / static_cast<double>(width));
    }

    std::vector<SketchParams> probes{identity};
    if (tmpl_.mode().kind == SketchMode::Kind::ensemble) {
        // One probe per sub-policy: every trend routed to it alone, so the
        // fit never scores below the best untouched sub-policy.
        for (int i = 0; i < width; ++i) {
            SketchParams one_hot = identity;
            for (auto& payload : one_hot.directives) {
                payload.assign(static_cast<std::size_t>(width), 0.0);
                payload[static_cast<std::size_t>(i)] = 1.0;
            }
            probes.push_back(std::move(one_hot));
        }
    }
    return probes;
}

FitResult fit_sketch(const SketchSpace& space,
                     const std::function<double(const SketchParams&)>& objective, int budget,
                     std::uint64_t seed) {
    if (!objective) throw ValidationError("fit objective must be callable");
    std::vector<std::vector<double>> probes;
    for (const auto& params : space.probe_params()) probes.push_back(space.encode(params));
    const ObjectiveFn wrapped = [&](std::span<const double> point) {
        return objective(space.decode(point));
    };
    OptimizeResult opt = optimize(space.space(), wrapped, budget, seed, probes);
    FitResult result;
    result.best = space.decode(opt.best_point);
    result.best_objective = opt.best_objective;
    result.history = std::move(opt.history);
    return result;
}

double evaluate_oe_objective(const std::vector<OrderTask>& orders, const TunedPolicy& policy,
                             const OEFeatureSpec& features, double gamma, double alpha,
                             std::uint64_t seed) {
    if (orders.empty()) throw EvalError("no validation orders to evaluate");
    const OEPolicyFn fn = [&](const PolicyState& state, const MarketFeatures& f) {
        return policy.decide(state, f).dist;
    };
    double total = 0.0;
    for (std::size_t i = 0; i < orders.size(); ++i) {
        Rng rng(derive_seed(seed, "oe_eval", i));
        const OEEpisodeResult episode = run_oe_episode(orders[i], fn, features, gamma, alpha, rng);
        total += episode.discounted_return;
    }
    return total / static_cast<double>(orders.size());
}

double evaluate_st_objective(const StMarket& market, const TimeRange& window,
                             const StRunConfig& config, const TunedPolicy& policy,
                             std::uint64_t seed) {
    const StDecisionFn decide = [&](const PolicyState& state, const MarketFeatures& f) {
        return policy.decide(state, f).dist;
    };
    Rng rng(derive_seed(seed, "st_eval"));
    const StRunResult run = run_st_backtest(market, window, config, decide, rng);
    const STMetrics metrics = st_metrics(run.curve);
    return metrics.sr.value_or(std::numeric_limits<double>::quiet_NaN());
}

std::vector<MarketFeatures> collect_market_features(const StMarket& market,
                                                    const TimeRange& window, int g,
                                                    bool normalize) {
    if (g < 2) throw DomainError("indicator window must be at least 2");
    std::vector<MarketFeatures> out;
    for (std::size_t i = market.step_at(window.start); i < market.step_count(); ++i) {
        if (!window.contains(market.timestamp(i))) break;
        if (i + 1 < static_cast<std::size_t>(g)) continue;  // indicator warm-up
        out.push_back(market.market_features_at(i, g, normalize));
    }
    return out;
}

std::vector<MarketFeatures> collect_order_features(const std::vector<OrderTask>& orders, int g,
                                                   bool normalize) {
    if (g < 2) throw DomainError("indicator window must be at least 2");
    std::vector<MarketFeatures> out;
    for (const auto& task : orders) {
        std::vector<double> known = task.history;
        known.insert(known.end(), task.price_path.begin(), task.price_path.end());
        for (std::size_t t = static_cast<std::size_t>(g) - 1; t < known.size(); ++t)
            out.push_back(market_features(known, t, g, normalize));
    }
    return out;
}

void write_trial_history(const SearchSpace& space, std::span<const Trial> history,
                         const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open trial history file '" + path + "' for writing");
    out << "trial";
    for (const auto& dim : space.dims) out << ',' << dim.name;
    out << ",objective\n";
    for (const auto& trial : history) {
        out << trial.index;
        for (double v : trial.point) out << ',' << format_g17(v);
        out << ',' << format_g17(trial.objective) << '\n';
    }
    if (!out) throw ConfigError("failed writing trial history file '" + path + "'");
}

}  // namespace trendtune
