#include "trendtune/env_st.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "trendtune/errors.hpp"

namespace trendtune {

namespace {

// Quantity granularity for notional-capped (crypto) trading.
double floor6(double q) { return std::floor(q * 1e6) / 1e6; }

std::string default_asset_id(std::size_t d) { return "asset_" + std::to_string(d); }

}  // namespace

double Portfolio::value(std::span<const double> prices) const {
    if (prices.size() != holdings.size()) {
        throw ValidationError("portfolio value: price vector width mismatch");
    }
    double v = balance - borrowed - accrued_interest;
    for (std::size_t d = 0; d < holdings.size(); ++d) v += holdings[d] * prices[d];
    return v;
}

StStepResult st_step(Portfolio& portfolio, std::span<const double> prices,
                     std::span<const int> action, const ActionCaps& caps, const TradeCosts& costs,
                     std::int64_t timestamp, std::span<const std::string> asset_ids) {
    const std::size_t D = portfolio.holdings.size();
    if (prices.size() != D || action.size() != D) {
        throw ValidationError("st_step: prices/action width must match holdings");
    }
    if (!asset_ids.empty() && asset_ids.size() != D) {
        throw ValidationError("st_step: asset id width mismatch");
    }
    if (caps.max_units < 1) throw ConfigError("st_step: max_units must be at least 1");
    for (double p : prices) {
        if (!(p > 0.0)) throw ValidationError("st_step: prices must be positive");
    }

    // Action integer -> traded quantity at this bar's close.
    auto quantity_for = [&](int units, std::size_t d) -> double {
        const int magnitude = std::min(std::abs(units), caps.max_units);
        if (caps.unit == ActionCaps::Unit::shares) return static_cast<double>(magnitude);
        const double notional =
            caps.notional_cap * static_cast<double>(magnitude) / caps.max_units;
        return floor6(notional / prices[d]);
    };
    auto id_of = [&](std::size_t d) {
        return asset_ids.empty() ? default_asset_id(d) : asset_ids[d];
    };

    StStepResult result;

    // Sells first: their proceeds are available for this bar's buys.
    for (std::size_t d = 0; d < D; ++d) {
        if (action[d] >= 0) continue;
        const double wanted = quantity_for(action[d], d);
        const double qty = std::min(wanted, portfolio.holdings[d]);
        if (qty <= 0.0) {
            if (wanted > 0.0) {
                result.trades.push_back({timestamp, id_of(d), 0.0, prices[d], 0.0, true});
            }
            continue;
        }
        const double gross = qty * prices[d];
        const double fee = costs.fee_rate * gross;
        portfolio.holdings[d] -= qty;
        portfolio.balance += gross - fee;
        result.reward += gross;
        result.trades.push_back({timestamp, id_of(d), -qty, prices[d], fee, qty < wanted});
    }

    // Buys in asset order, each clipped to the cash still available.
    for (std::size_t d = 0; d < D; ++d) {
        if (action[d] <= 0) continue;
        const double wanted = quantity_for(action[d], d);
        if (wanted <= 0.0) continue;
        const double unit_cost = prices[d] * (1.0 + costs.fee_rate);
        double affordable = portfolio.balance / unit_cost;
        affordable = caps.unit == ActionCaps::Unit::shares ? std::floor(affordable + 1e-9)
                                                           : floor6(affordable + 1e-12);
        const double qty = std::min(wanted, std::max(affordable, 0.0));
        if (qty <= 0.0) {
            result.trades.push_back({timestamp, id_of(d), 0.0, prices[d], 0.0, true});
            continue;
        }
        const double gross = qty * prices[d];
        const double fee = costs.fee_rate * gross;
        portfolio.holdings[d] += qty;
        portfolio.balance -= gross + fee;
        result.reward -= gross;
        result.trades.push_back({timestamp, id_of(d), qty, prices[d], fee, qty < wanted});
    }
    return result;
}

MarginEvent settle_margin(Portfolio& portfolio, std::span<const double> prices,
                          const MarginTerms& terms, std::int64_t timestamp) {
    if (terms.rebalance_period <= 0) throw ConfigError("margin rebalance period must be positive");
    if (terms.annual_rate < 0.0) throw ConfigError("margin rate must be non-negative");

    MarginEvent event;
    event.timestamp = timestamp;
    const double period_fraction =
        static_cast<double>(terms.rebalance_period) / static_cast<double>(kYearSeconds);
    event.interest = portfolio.borrowed * terms.annual_rate * period_fraction;

    if (portfolio.balance < event.interest) {
        // Cannot pay: book the liability, flag the call, leave the
        // principal untouched — the run is over.
        portfolio.accrued_interest += event.interest;
        event.margin_call = true;
        event.borrowed_after = portfolio.borrowed;
        return event;
    }
    portfolio.balance -= event.interest;

    const double equity = portfolio.value(prices);
    if (equity <= 0.0) {
        event.margin_call = true;
        event.borrowed_after = portfolio.borrowed;
        return event;
    }
    // Reset to 1:1 loan-to-value: principal equals net account value.
    const double delta = equity - portfolio.borrowed;
    portfolio.borrowed += delta;
    portfolio.balance += delta;
    event.borrowed_after = portfolio.borrowed;
    return event;
}

std::vector<MarginEvent> apply_margin(Portfolio& portfolio, std::span<const double> prices,
                                      std::int64_t elapsed, const MarginTerms& terms) {
    if (terms.rebalance_period <= 0) throw ConfigError("margin rebalance period must be positive");
    std::vector<MarginEvent> events;
    const std::int64_t boundaries = elapsed / terms.rebalance_period;
    for (std::int64_t k = 1; k <= boundaries; ++k) {
        events.push_back(settle_margin(portfolio, prices, terms, k * terms.rebalance_period));
        if (events.back().margin_call) break;
    }
    return events;
}

std::vector<double> build_state_vector(const Portfolio& portfolio, std::span<const double> prices,
                                       std::span<const StateFeatures> features) {
    const std::size_t D = portfolio.holdings.size();
    if (D == 0) throw ValidationError("state vector needs at least 1 asset");
    if (prices.size() != D || features.size() != D) {
        throw ValidationError("state vector inputs must cover all assets");
    }
    std::vector<double> state;
    state.reserve(1 + D * (2 + kStateFeatureCount));
    state.push_back(portfolio.balance);
    for (double p : prices) state.push_back(p);
    for (double h : portfolio.holdings) state.push_back(h);
    for (const StateFeatures& f : features) {
        for (double v : to_array(f)) state.push_back(v);
    }
    return state;
}

StMarket::StMarket(std::vector<AssetSeries> assets, std::optional<AssetSeries> market_index)
    : assets_(std::move(assets)) {
    if (assets_.empty()) throw ValidationError("market needs at least 1 asset");
    const AssetSeries& first = assets_[0];
    if (first.bars.empty()) throw ValidationError("market series are empty");
    for (const AssetSeries& a : assets_) {
        if (a.bars.size() != first.bars.size()) {
            throw ValidationError("asset series must share one timestamp grid (length mismatch)");
        }
        for (std::size_t i = 0; i < a.bars.size(); ++i) {
            if (a.bars[i].timestamp != first.bars[i].timestamp) {
                throw ValidationError("asset series must share one timestamp grid (timestamp " +
                                      std::to_string(a.bars[i].timestamp) + " misaligned)");
            }
        }
    }
    tables_.reserve(assets_.size());
    for (const AssetSeries& a : assets_) tables_.emplace_back(a);

    if (market_index.has_value()) {
        const AssetSeries& idx = *market_index;
        if (idx.bars.size() != first.bars.size()) {
            throw ValidationError("market index must share the asset timestamp grid");
        }
        for (std::size_t i = 0; i < idx.bars.size(); ++i) {
            if (idx.bars[i].timestamp != first.bars[i].timestamp) {
                throw ValidationError("market index timestamps misaligned");
            }
        }
        index_closes_ = idx.closes();
    } else {
        // Equal-weight composite of per-asset closes, each normalized to
        // its first bar so price scales do not skew the mix.
        index_closes_.resize(first.bars.size());
        for (std::size_t i = 0; i < first.bars.size(); ++i) {
            double acc = 0.0;
            for (const AssetSeries& a : assets_) acc += a.bars[i].close / a.bars[0].close;
            index_closes_[i] = acc / static_cast<double>(assets_.size());
        }
    }
}

std::vector<double> StMarket::prices_at(std::size_t i) const {
    std::vector<double> p(assets_.size());
    for (std::size_t d = 0; d < assets_.size(); ++d) p[d] = assets_[d].bars[i].close;
    return p;
}

std::size_t StMarket::step_at(std::int64_t t) const {
    return lower_bound_index(assets_[0], t);
}

MarketFeatures StMarket::market_features_at(std::size_t i, int window, bool normalize) const {
    return market_features(index_closes_, i, window, normalize);
}

StRunResult run_st_backtest(const StMarket& market, const TimeRange& window,
                            const StRunConfig& config, const StDecisionFn& decide, Rng& rng,
                            const StLabelFn& label) {
    if (config.initial_capital <= 0.0) throw ConfigError("initial capital must be positive");
    const int D = market.asset_count();
    const std::size_t begin = market.step_at(window.start);
    const std::size_t end = market.step_at(window.end);
    if (begin >= end) throw EvalError("backtest window holds no bars");
    if (begin == 0) {
        throw EvalError("backtest window starts at the first bar; indicators need history");
    }
    // Warm-up: every feature the policies consume must be defined from
    // the first in-window bar onward.
    const std::size_t warmup =
        std::max<std::size_t>(kStateFeatureWarmup, config.indicator_window);
    if (begin < warmup) {
        throw EvalError("backtest window needs " + std::to_string(warmup) +
                        " bars of history, first bar has " + std::to_string(begin));
    }

    Portfolio portfolio;
    portfolio.balance = config.initial_capital;
    portfolio.holdings.assign(D, 0.0);

    StRunResult result;
    result.curve.periods_per_year = config.periods_per_year;
    // Anchor the curve one bar before the window so the first period's
    // return is measured from the initial capital.
    result.curve.timestamps.push_back(market.timestamp(begin - 1));
    result.curve.values.push_back(config.initial_capital);

    std::int64_t next_settle = 0;
    if (config.margin) {
        // Borrow 1:1 against the starting equity.
        portfolio.borrowed = config.initial_capital;
        portfolio.balance += portfolio.borrowed;
        next_settle = market.timestamp(begin - 1) + config.margin_terms.rebalance_period;
    }

    std::vector<std::string> asset_ids(D);
    for (int d = 0; d < D; ++d) asset_ids[d] = market.asset(d).asset_id;

    std::vector<int> action(D, 0);
    const int m_expected = 2 * config.caps.max_units + 1;

    for (std::size_t i = begin; i < end; ++i) {
        const std::int64_t ts = market.timestamp(i);
        const std::vector<double> prices = market.prices_at(i);

        if (config.margin) {
            while (ts >= next_settle && !result.margin_called) {
                MarginEvent ev = settle_margin(portfolio, prices, config.margin_terms, next_settle);
                result.margin_events.push_back(ev);
                result.margin_called = ev.margin_call;
                next_settle += config.margin_terms.rebalance_period;
            }
            if (result.margin_called) break;
        }

        const MarketFeatures mf =
            market.market_features_at(i, config.indicator_window, config.normalize_indicators);
        if (label) result.trend_timeline.emplace_back(ts, label(mf));

        for (int d = 0; d < D; ++d) {
            PolicyState state;
            state.key = asset_ids[d] + "@" + std::to_string(ts);
            Portfolio single;
            single.balance = portfolio.balance;
            single.holdings = {portfolio.holdings[d]};
            state.features = build_state_vector(single, std::span(&prices[d], 1),
                                                std::span(&market.features(d).at(i), 1));
            const ActionDistribution dist = decide(state, mf);
            if (static_cast<int>(dist.probs.size()) != m_expected) {
                throw ValidationError("trading policy must emit " + std::to_string(m_expected) +
                                      " action probabilities");
            }
            validate_distribution(dist);
            action[d] = static_cast<int>(rng.sample_discrete(dist.probs)) - config.caps.max_units;
        }

        StStepResult step = st_step(portfolio, prices, action, config.caps, config.costs, ts,
                                    asset_ids);
        for (TradeRecord& tr : step.trades) result.trades.push_back(std::move(tr));

        result.curve.timestamps.push_back(ts);
        result.curve.values.push_back(portfolio.value(prices));
    }
    return result;
}

}  // namespace trendtune
