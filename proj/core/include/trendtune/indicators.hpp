#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "trendtune/market_data.hpp"

namespace trendtune {

// The three trend indicators consumed by the sketch, measured over the
// g-bar window ending at index t.
struct MarketFeatures {
    double vol = 0.0;  // price variance over the window (price² units)
    double dr = 0.0;   // downside risk: RMS of below-mean shortfalls (price units)
    double gr = 0.0;   // growth rate: fractional rise start→end, 0 if non-increasing
    std::size_t t = 0;
    int g = 0;
};

// Population variance of the window's prices. The window length is the
// divisor. Requires at least 2 prices.
double volatility(std::span<const double> window);

// Root-mean-square of below-mean shortfalls: sqrt((1/n) Σ_{x<x̄} (x̄−x)²)
// where n counts below-mean observations; 0 when n = 0.
double downside_risk(std::span<const double> window);

// (end−start)/start when end > start, else 0. Start price must be positive.
double growth_rate(double window_start_price, double window_end_price);

// All three indicators over closes[t−g+1 .. t]. With `normalize` set,
// vol is divided by x̄² and dr by x̄ (x̄ = window mean) so thresholds are
// comparable across price scales; default off keeps raw price units.
MarketFeatures market_features(std::span<const double> closes, std::size_t t, int g,
                               bool normalize = false);

inline constexpr int kMarketFeatureWindow = 14;  // default g

// The nine per-asset state features fed to trading policies.
struct StateFeatures {
    double macd = 0.0;          // EMA(12) − EMA(26) of close
    double macds = 0.0;         // EMA(9) of macd
    double boll_ub = 0.0;       // 20-bar mean + 2·population std
    double boll_lb = 0.0;       // 20-bar mean − 2·population std
    double rsi_30 = 0.0;        // simple-average RSI over 30 diffs; 50 on zero movement
    double cci_30 = 0.0;        // commodity channel index, 30-bar, 0.015 scale
    double dx_30 = 0.0;         // directional index over 30-bar DM/TR sums
    double close_30_sma = 0.0;  // 30-bar simple moving average of close
    double close_60_sma = 0.0;  // 60-bar simple moving average of close
};

inline constexpr int kStateFeatureCount = 9;

// Fixed serialization order for feature vectors and dump columns.
const std::array<const char*, kStateFeatureCount>& state_feature_names();
std::array<double, kStateFeatureCount> to_array(const StateFeatures& f);

// Precomputed state features for every bar index of a series in one pass.
// Indices below first_valid() lack warm-up history and cannot be read.
class StateFeatureTable {
public:
    explicit StateFeatureTable(const AssetSeries& series);

    std::size_t size() const { return rows_.size(); }
    std::size_t first_valid() const { return first_valid_; }
    const StateFeatures& at(std::size_t t) const;

private:
    std::vector<StateFeatures> rows_;
    std::size_t first_valid_ = 0;
};

// Single-index convenience wrapper around StateFeatureTable.
StateFeatures state_features(const AssetSeries& series, std::size_t t);

// Bars of history required before state features are defined.
inline constexpr std::size_t kStateFeatureWarmup = 60;

}  // namespace trendtune
