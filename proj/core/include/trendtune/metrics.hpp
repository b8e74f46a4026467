#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace trendtune {

// Portfolio value over time plus the factor that annualizes per-period
// statistics (252 for daily bars, 1095 for 8-hour bars).
struct EquityCurve {
    std::vector<std::int64_t> timestamps;
    std::vector<double> values;
    double periods_per_year = 252.0;
};

// Throws ValidationError unless values are positive, timestamps strictly
// increasing, and both arrays the same length.
void validate_curve(const EquityCurve& curve);

// One executed order compared against its day's mean market price.
struct OEOrderResult {
    std::string order_id;
    double achieved_price = 0.0;  // volume-weighted achieved price p_s
    double baseline_price = 0.0;  // mean market price over the horizon
    double pa_bps = 0.0;          // 1e4 · (p_s/baseline − 1)
};

OEOrderResult make_order_result(std::string order_id, double achieved_price,
                                double baseline_price);

// Mean per-order price advantage in basis points. Sell convention:
// positive when executions beat the mean price.
double price_advantage(std::span<const OEOrderResult> results);

// Compounds a per-day advantage into an annual figure:
// (1 + pa·1e-4)^periods_per_year − 1.
double additional_annualized_return(double pa_bps, double periods_per_year = 252.0);

// E[PA | PA>0] / |E[PA | PA<0]|. No winners → 0; winners but no losers →
// +infinity sentinel.
double gain_loss_ratio(std::span<const OEOrderResult> results);

// Fraction of orders with strictly positive PA; zero PA counts against.
double positive_rate(std::span<const OEOrderResult> results);

struct OEMetrics {
    double pa = 0.0;
    double arr = 0.0;
    double glr = 0.0;
    double pos = 0.0;
    int orders = 0;
};

OEMetrics oe_metrics(std::span<const OEOrderResult> results, double periods_per_year = 252.0);

struct STMetrics {
    double ar = 0.0;           // annualized rate of return
    double cr = 0.0;           // cumulative return
    double av = 0.0;           // annualized volatility of simple returns
    double md = 0.0;           // maximum drawdown, ≤ 0
    std::optional<double> sr;  // Sharpe ratio; empty when return volatility is 0
    int periods = 0;
};

// CR = V_end/V_0 − 1; AR = (1+CR)^(ppy/n) − 1; AV = std(returns)·√ppy;
// MD = min_t (V_t / max_{u≤t} V_u − 1); SR = mean excess return / std ·
// √ppy. Std is the population standard deviation. Needs ≥ 2 samples.
STMetrics st_metrics(const EquityCurve& curve, double risk_free_rate = 0.0);

// Single-pass running-maximum drawdown; equals the brute force over all
// peak ≤ trough pairs.
double max_drawdown(std::span<const double> values);

// Per-period simple returns v[i+1]/v[i] − 1.
std::vector<double> simple_returns(std::span<const double> values);

// Either metric flavor under one roof for report plumbing.
struct MetricReport {
    enum class Flavor { oe, st };
    Flavor flavor = Flavor::st;
    OEMetrics oe;
    STMetrics st;
};

// Equity-curve CSV round trip (timestamp,value rows at full precision).
void write_equity_curve(const EquityCurve& curve, const std::string& path);
EquityCurve read_equity_curve(const std::string& path, double periods_per_year = 252.0);

}  // namespace trendtune
