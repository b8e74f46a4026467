#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "trendtune/indicators.hpp"
#include "trendtune/market_data.hpp"
#include "trendtune/metrics.hpp"
#include "trendtune/policy.hpp"
#include "trendtune/rng.hpp"
#include "trendtune/sketch.hpp"

namespace trendtune {

inline constexpr std::int64_t kYearSeconds = 365LL * 86400;

// Cash, positions and loan state of one trading account. Holdings are
// stored as doubles; share-based markets only ever write whole numbers
// into them, while notional-capped markets trade fractional quantities.
struct Portfolio {
    double balance = 0.0;
    std::vector<double> holdings;
    double borrowed = 0.0;
    double accrued_interest = 0.0;  // charged but unpaid (only after a margin call)

    // balance + Σ holdings·price − borrowed − accrued_interest.
    double value(std::span<const double> prices) const;
};

struct TradeRecord {
    std::int64_t timestamp = 0;
    std::string asset_id;
    double quantity = 0.0;  // signed: + buy, − sell
    double price = 0.0;
    double fee = 0.0;
    bool clipped = false;  // request was cut down to holdings/cash
};

struct TradeCosts {
    double fee_rate = 0.001;  // charged on |quantity|·price, each way
};

// Action scaling. Share-based markets trade the action integer directly
// as shares (|action| ≤ max_units). Notional-capped markets map the
// full-scale action to `notional_cap` of quote currency per interval,
// converted to quantity at the bar's close and floored to 6 decimals.
struct ActionCaps {
    enum class Unit { shares, notional };
    Unit unit = Unit::shares;
    int max_units = 100;
    double notional_cap = 100000.0;
};

struct StStepResult {
    double reward = 0.0;  // gross sell change − gross buy change (fees excluded)
    std::vector<TradeRecord> trades;
};

// Executes one integer action vector against current prices. Sells run
// first (clipped to holdings), then buys in asset order (clipped to the
// cash remaining after earlier trades and fees). The reward follows the
// gross formula; fees hit the balance only.
StStepResult st_step(Portfolio& portfolio, std::span<const double> prices,
                     std::span<const int> action, const ActionCaps& caps, const TradeCosts& costs,
                     std::int64_t timestamp, std::span<const std::string> asset_ids = {});

struct MarginTerms {
    double annual_rate = 0.0775;
    // Quarter = exactly year/4 seconds, so four settlements cover one
    // year of simple interest without rounding drift.
    std::int64_t rebalance_period = kYearSeconds / 4;
};

struct MarginEvent {
    std::int64_t timestamp = 0;
    double interest = 0.0;
    double borrowed_after = 0.0;
    bool margin_call = false;
};

// One settlement boundary: charge simple interest borrowed·rate·
// (period/year) against the balance, then reset the principal to the
// account's net value (1:1 loan-to-value). A balance too small to pay
// the interest books it as accrued liability and raises the margin-call
// flag instead of resetting.
MarginEvent settle_margin(Portfolio& portfolio, std::span<const double> prices,
                          const MarginTerms& terms, std::int64_t timestamp);

// Processes every settlement boundary inside `elapsed` seconds at
// constant prices; stops early on a margin call.
std::vector<MarginEvent> apply_margin(Portfolio& portfolio, std::span<const double> prices,
                                      std::int64_t elapsed, const MarginTerms& terms);

// Flat state layout: [balance] ++ closes·D ++ holdings·D ++ per-asset
// 9-feature blocks. Length 1 + 11·D (331 at D = 30).
std::vector<double> build_state_vector(const Portfolio& portfolio, std::span<const double> prices,
                                       std::span<const StateFeatures> features);

// Aligned multi-asset market: every asset series (and the market index
// used for trend indicators) shares one timestamp grid. State features
// per asset are precomputed on construction.
class StMarket {
public:
    // With no explicit index series, trend indicators run on an
    // equal-weight composite of the asset closes, normalized to the
    // first bar.
    explicit StMarket(std::vector<AssetSeries> assets,
                      std::optional<AssetSeries> market_index = std::nullopt);

    int asset_count() const { return static_cast<int>(assets_.size()); }
    std::size_t step_count() const { return assets_[0].bars.size(); }
    std::int64_t timestamp(std::size_t i) const { return assets_[0].bars[i].timestamp; }
    std::int64_t interval() const { return assets_[0].interval; }
    const AssetSeries& asset(int d) const { return assets_.at(d); }
    const StateFeatureTable& features(int d) const { return tables_.at(d); }
    const std::vector<double>& index_closes() const { return index_closes_; }
    std::vector<double> prices_at(std::size_t i) const;
    // Index of the first step with timestamp >= t, else step_count().
    std::size_t step_at(std::int64_t t) const;

    // Trend indicators over the market index closes ending at step i.
    MarketFeatures market_features_at(std::size_t i, int window, bool normalize) const;

private:
    std::vector<AssetSeries> assets_;
    std::vector<StateFeatureTable> tables_;
    std::vector<double> index_closes_;
};

struct StRunConfig {
    double initial_capital = 1000000.0;
    TradeCosts costs;
    ActionCaps caps;
    bool margin = false;
    MarginTerms margin_terms;
    int indicator_window = kMarketFeatureWindow;
    bool normalize_indicators = false;
    double periods_per_year = 252.0;
};

struct StRunResult {
    EquityCurve curve;
    std::vector<TradeRecord> trades;
    std::vector<std::pair<std::int64_t, TrendLabel>> trend_timeline;
    std::vector<MarginEvent> margin_events;
    bool margin_called = false;
};

// Per-asset decision: the policy sees the asset's 12-value state
// ([balance, close, shares, 9 features], key "asset@timestamp") plus the
// market trend indicators, and returns a distribution over 2k+1 actions
// (index i maps to the integer action i − k).
using StDecisionFn = std::function<ActionDistribution(const PolicyState&, const MarketFeatures&)>;

// Trend labeler for the report timeline; optional.
using StLabelFn = std::function<TrendLabel(const MarketFeatures&)>;

// Runs the trading loop over the bars inside `window`. The equity curve
// starts one bar before the window at the initial capital and records
// the account value after each bar's trades. Margin (when enabled)
// borrows 1:1 at the start and settles per MarginTerms; a margin call
// stops the run with the flag set.
StRunResult run_st_backtest(const StMarket& market, const TimeRange& window,
                            const StRunConfig& config, const StDecisionFn& decide, Rng& rng,
                            const StLabelFn& label = {});

}  // namespace trendtune
