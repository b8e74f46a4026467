#include "trendtune/indicators.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "trendtune/errors.hpp"

namespace trendtune {

double volatility(std::span<const double> window) {
    if (window.size() < 2) throw DomainError("volatility: window must hold at least 2 prices");
    const double n = static_cast<double>(window.size());
    double mean = 0.0;
    for (double x : window) mean += x;
    mean /= n;
    double acc = 0.0;
    for (double x : window) acc += (x - mean) * (x - mean);
    return acc / n;
}

double downside_risk(std::span<const double> window) {
    if (window.empty()) throw DomainError("downside_risk: empty window");
    const double n = static_cast<double>(window.size());
    double mean = 0.0;
    for (double x : window) mean += x;
    mean /= n;
    double acc = 0.0;
    std::size_t below = 0;
    for (double x : window) {
        if (x < mean) {
            acc += (mean - x) * (mean - x);
            ++below;
        }
    }
    if (below == 0) return 0.0;
    return std::sqrt(acc / static_cast<double>(below));
}

double growth_rate(double window_start_price, double window_end_price) {
    if (window_start_price <= 0.0) throw DomainError("growth_rate: start price must be positive");
    if (window_end_price <= window_start_price) return 0.0;
    return (window_end_price - window_start_price) / window_start_price;
}

MarketFeatures market_features(std::span<const double> closes, std::size_t t, int g,
                               bool normalize) {
    if (g < 2) throw DomainError("market_features: window length must be at least 2");
    if (t >= closes.size()) throw DomainError("market_features: index out of range");
    if (t + 1 < static_cast<std::size_t>(g)) {
        throw DomainError("market_features: warm-up, need " + std::to_string(g) +
                          " bars ending at index " + std::to_string(t));
    }
    const std::span<const double> window = closes.subspan(t + 1 - g, g);
    MarketFeatures f;
    f.t = t;
    f.g = g;
    f.vol = volatility(window);
    f.dr = downside_risk(window);
    f.gr = growth_rate(window.front(), window.back());
    if (normalize) {
        double mean = 0.0;
        for (double x : window) mean += x;
        mean /= static_cast<double>(g);
        if (mean <= 0.0) throw DomainError("market_features: non-positive window mean");
        f.vol /= mean * mean;
        f.dr /= mean;
    }
    return f;
}

const std::array<const char*, kStateFeatureCount>& state_feature_names() {
    static const std::array<const char*, kStateFeatureCount> names = {
        "macd", "macds", "boll_ub", "boll_lb", "rsi_30",
        "cci_30", "dx_30", "close_30_sma", "close_60_sma"};
    return names;
}

std::array<double, kStateFeatureCount> to_array(const StateFeatures& f) {
    return {f.macd, f.macds, f.boll_ub, f.boll_lb, f.rsi_30,
            f.cci_30, f.dx_30, f.close_30_sma, f.close_60_sma};
}

namespace {

// Rolling simple mean over the trailing `len` values of `xs` ending at t.
double window_mean(const std::vector<double>& xs, std::size_t t, std::size_t len) {
    double acc = 0.0;
    for (std::size_t i = t + 1 - len; i <= t; ++i) acc += xs[i];
    return acc / static_cast<double>(len);
}

}  // namespace

StateFeatureTable::StateFeatureTable(const AssetSeries& series) {
    const std::size_t n = series.bars.size();
    first_valid_ = kStateFeatureWarmup;
    rows_.resize(n);
    if (n == 0) return;

    std::vector<double> close(n), high(n), low(n);
    for (std::size_t i = 0; i < n; ++i) {
        close[i] = series.bars[i].close;
        high[i] = series.bars[i].high;
        low[i] = series.bars[i].low;
    }

    // EMAs seeded with the first observation.
    const double a12 = 2.0 / 13.0, a26 = 2.0 / 27.0, a9 = 2.0 / 10.0;
    double ema12 = close[0], ema26 = close[0];
    double macds = 0.0;  // macd at index 0 is 0

    std::vector<double> tp(n);  // typical price for CCI
    for (std::size_t i = 0; i < n; ++i) tp[i] = (high[i] + low[i] + close[i]) / 3.0;

    // Per-step directional movement and true range for DX.
    std::vector<double> plus_dm(n, 0.0), minus_dm(n, 0.0), tr(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) {
        const double up = high[i] - high[i - 1];
        const double down = low[i - 1] - low[i];
        if (up > down && up > 0.0) plus_dm[i] = up;
        if (down > up && down > 0.0) minus_dm[i] = down;
        tr[i] = std::max({high[i] - low[i], std::abs(high[i] - close[i - 1]),
                          std::abs(low[i] - close[i - 1])});
    }
    std::vector<double> gain(n, 0.0), loss(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) {
        const double d = close[i] - close[i - 1];
        if (d > 0.0) gain[i] = d;
        else loss[i] = -d;
    }

    for (std::size_t t = 0; t < n; ++t) {
        if (t > 0) {
            ema12 = a12 * close[t] + (1.0 - a12) * ema12;
            ema26 = a26 * close[t] + (1.0 - a26) * ema26;
        }
        const double macd = ema12 - ema26;
        macds = t == 0 ? macd : a9 * macd + (1.0 - a9) * macds;

        StateFeatures& f = rows_[t];
        f.macd = macd;
        f.macds = macds;

        if (t + 1 >= 20) {
            const double m = window_mean(close, t, 20);
            double var = 0.0;
            for (std::size_t i = t - 19; i <= t; ++i) var += (close[i] - m) * (close[i] - m);
            var /= 20.0;
            const double sd = std::sqrt(var);
            f.boll_ub = m + 2.0 * sd;
            f.boll_lb = m - 2.0 * sd;
        }

        if (t >= 30) {
            double g = 0.0, l = 0.0;
            for (std::size_t i = t - 29; i <= t; ++i) {
                g += gain[i];
                l += loss[i];
            }
            // Simple-average RSI; zero net movement maps to the neutral 50.
            f.rsi_30 = (g + l) == 0.0 ? 50.0 : 100.0 * g / (g + l);
        }

        if (t + 1 >= 30) {
            const double m = window_mean(tp, t, 30);
            double mad = 0.0;
            for (std::size_t i = t - 29; i <= t; ++i) mad += std::abs(tp[i] - m);
            mad /= 30.0;
            f.cci_30 = mad == 0.0 ? 0.0 : (tp[t] - m) / (0.015 * mad);
        }

        if (t >= 30) {
            double pdm = 0.0, mdm = 0.0, trs = 0.0;
            for (std::size_t i = t - 29; i <= t; ++i) {
                pdm += plus_dm[i];
                mdm += minus_dm[i];
                trs += tr[i];
            }
            const double pdi = trs == 0.0 ? 0.0 : 100.0 * pdm / trs;
            const double mdi = trs == 0.0 ? 0.0 : 100.0 * mdm / trs;
            const double denom = pdi + mdi;
            f.dx_30 = denom == 0.0 ? 0.0 : 100.0 * std::abs(pdi - mdi) / denom;
        }

        if (t + 1 >= 30) f.close_30_sma = window_mean(close, t, 30);
        if (t + 1 >= 60) f.close_60_sma = window_mean(close, t, 60);
    }
}

const StateFeatures& StateFeatureTable::at(std::size_t t) const {
    if (t < first_valid_) {
        throw DomainError("state features: warm-up, index " + std::to_string(t) +
                          " precedes first valid index " + std::to_string(first_valid_));
    }
    if (t >= rows_.size()) throw DomainError("state features: index out of range");
    return rows_[t];
}

StateFeatures state_features(const AssetSeries& series, std::size_t t) {
    if (t < kStateFeatureWarmup) {
        throw DomainError("state features: warm-up, index " + std::to_string(t) +
                          " needs " + std::to_string(kStateFeatureWarmup) + " bars of history");
    }
    StateFeatureTable table(series);
    return table.at(t);
}

}  // namespace trendtune
