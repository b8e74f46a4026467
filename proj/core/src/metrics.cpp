#include "trendtune/metrics.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "trendtune/errors.hpp"

namespace trendtune {

void validate_curve(const EquityCurve& curve) {
    if (curve.timestamps.size() != curve.values.size()) {
        throw ValidationError("equity curve timestamp/value lengths differ");
    }
    for (double v : curve.values) {
        if (!std::isfinite(v) || v <= 0.0) {
            throw ValidationError("equity curve values must be positive and finite");
        }
    }
    for (std::size_t i = 1; i < curve.timestamps.size(); ++i) {
        if (curve.timestamps[i] <= curve.timestamps[i - 1]) {
            throw ValidationError("equity curve timestamps must be strictly increasing");
        }
    }
    if (curve.periods_per_year <= 0.0) {
        throw ValidationError("periods_per_year must be positive");
    }
}

OEOrderResult make_order_result(std::string order_id, double achieved_price,
                                double baseline_price) {
    if (baseline_price <= 0.0) {
        throw ValidationError("order baseline price must be positive");
    }
    OEOrderResult r;
    r.order_id = std::move(order_id);
    r.achieved_price = achieved_price;
    r.baseline_price = baseline_price;
    r.pa_bps = 1e4 * (achieved_price / baseline_price - 1.0);
    return r;
}

double price_advantage(std::span<const OEOrderResult> results) {
    if (results.empty()) throw DomainError("price_advantage: no orders");
    double acc = 0.0;
    for (const OEOrderResult& r : results) acc += r.pa_bps;
    return acc / static_cast<double>(results.size());
}

double additional_annualized_return(double pa_bps, double periods_per_year) {
    if (!std::isfinite(pa_bps)) throw DomainError("additional_annualized_return: non-finite input");
    return std::pow(1.0 + pa_bps * 1e-4, periods_per_year) - 1.0;
}

double gain_loss_ratio(std::span<const OEOrderResult> results) {
    if (results.empty()) throw DomainError("gain_loss_ratio: no orders");
    double gain = 0.0, loss = 0.0;
    int winners = 0, losers = 0;
    for (const OEOrderResult& r : results) {
        if (r.pa_bps > 0.0) {
            gain += r.pa_bps;
            ++winners;
        } else if (r.pa_bps < 0.0) {
            loss += r.pa_bps;
            ++losers;
        }
    }
    if (winners == 0) return 0.0;
    if (losers == 0) return std::numeric_limits<double>::infinity();
    const double mean_gain = gain / winners;
    const double mean_loss = loss / losers;  // negative
    return mean_gain / std::abs(mean_loss);
}

double positive_rate(std::span<const OEOrderResult> results) {
    if (results.empty()) throw DomainError("positive_rate: no orders");
    int winners = 0;
    for (const OEOrderResult& r : results) {
        if (r.pa_bps > 0.0) ++winners;
    }
    return static_cast<double>(winners) / static_cast<double>(results.size());
}

OEMetrics oe_metrics(std::span<const OEOrderResult> results, double periods_per_year) {
    OEMetrics m;
    m.pa = price_advantage(results);
    m.arr = additional_annualized_return(m.pa, periods_per_year);
    m.glr = gain_loss_ratio(results);
    m.pos = positive_rate(results);
    m.orders = static_cast<int>(results.size());
    return m;
}

std::vector<double> simple_returns(std::span<const double> values) {
    if (values.size() < 2) throw DomainError("simple_returns: need at least 2 values");
    std::vector<double> out;
    out.reserve(values.size() - 1);
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i - 1] == 0.0) throw DomainError("simple_returns: zero value");
        out.push_back(values[i] / values[i - 1] - 1.0);
    }
    return out;
}

double max_drawdown(std::span<const double> values) {
    if (values.empty()) throw DomainError("max_drawdown: empty curve");
    double peak = values[0];
    double worst = 0.0;
    for (double v : values) {
        peak = std::max(peak, v);
        worst = std::min(worst, v / peak - 1.0);
    }
    return worst;
}

STMetrics st_metrics(const EquityCurve& curve, double risk_free_rate) {
    validate_curve(curve);
    if (curve.values.size() < 2) throw DomainError("st_metrics: need at least 2 samples");

    STMetrics m;
    const std::vector<double> rets = simple_returns(curve.values);
    const double n = static_cast<double>(rets.size());
    m.periods = static_cast<int>(rets.size());

    m.cr = curve.values.back() / curve.values.front() - 1.0;
    m.ar = std::pow(1.0 + m.cr, curve.periods_per_year / n) - 1.0;

    double mean = 0.0;
    for (double r : rets) mean += r;
    mean /= n;
    double var = 0.0;
    for (double r : rets) var += (r - mean) * (r - mean);
    var /= n;
    const double sd = std::sqrt(var);
    const double root_ppy = std::sqrt(curve.periods_per_year);
    m.av = sd * root_ppy;
    m.md = max_drawdown(curve.values);

    if (sd > 0.0) {
        const double rf_per_period = risk_free_rate / curve.periods_per_year;
        m.sr = (mean - rf_per_period) / sd * root_ppy;
    }
    return m;
}

void write_equity_curve(const EquityCurve& curve, const std::string& path) {
    validate_curve(curve);
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write equity curve: " + path);
    out << "timestamp,value\n";
    char buf[96];
    for (std::size_t i = 0; i < curve.values.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%lld,%.17g",
                      static_cast<long long>(curve.timestamps[i]), curve.values[i]);
        out << buf << '\n';
    }
    if (!out) throw ConfigError("failed writing equity curve: " + path);
}

EquityCurve read_equity_curve(const std::string& path, double periods_per_year) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open equity curve: " + path);
    EquityCurve curve;
    curve.periods_per_year = periods_per_year;
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty equity curve file: " + path);
    int row = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        ++row;
        std::stringstream ss(line);
        std::string ts_field, value_field;
        if (!std::getline(ss, ts_field, ',') || !std::getline(ss, value_field, ',')) {
            throw ParseError("malformed equity curve row " + std::to_string(row));
        }
        errno = 0;
        char* end = nullptr;
        const long long ts = std::strtoll(ts_field.c_str(), &end, 10);
        if (end != ts_field.c_str() + ts_field.size() || errno == ERANGE) {
            throw ParseError("bad timestamp in equity curve row " + std::to_string(row));
        }
        errno = 0;
        const double v = std::strtod(value_field.c_str(), &end);
        if (end != value_field.c_str() + value_field.size() || errno == ERANGE) {
            throw ParseError("bad value in equity curve row " + std::to_string(row));
        }
        curve.timestamps.push_back(static_cast<std::int64_t>(ts));
        curve.values.push_back(v);
    }
    validate_curve(curve);
    return curve;
}

}  // namespace trendtune
