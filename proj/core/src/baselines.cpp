#include "trendtune/baselines.hpp"

#include <cmath>
#include <string>

#include "trendtune/errors.hpp"

namespace trendtune {

void validate_schedule(const Schedule& schedule, double tol) {
    if (schedule.fractions.empty()) throw ValidationError("schedule is empty");
    double sum = 0.0;
    for (double f : schedule.fractions) {
        if (!std::isfinite(f) || f < 0.0) {
            throw ValidationError("schedule fractions must be finite and non-negative");
        }
        sum += f;
    }
    if (std::abs(sum - 1.0) > tol) {
        throw ValidationError("schedule fractions must sum to 1 (got " + std::to_string(sum) + ")");
    }
}

Schedule twap_schedule(int steps) {
    if (steps < 1) throw DomainError("twap_schedule: need at least 1 step");
    Schedule s;
    s.fractions.assign(static_cast<std::size_t>(steps), 1.0 / static_cast<double>(steps));
    return s;
}

VwapSchedule vwap_schedule(const std::vector<std::vector<double>>& volume_profiles, int steps) {
    if (steps < 1) throw DomainError("vwap_schedule: need at least 1 step");
    if (volume_profiles.empty()) throw DomainError("vwap_schedule: need at least 1 history day");
    std::vector<double> mean(static_cast<std::size_t>(steps), 0.0);
    for (const std::vector<double>& day : volume_profiles) {
        if (static_cast<int>(day.size()) != steps) {
            throw ValidationError("volume profile length does not match the horizon");
        }
        for (int t = 0; t < steps; ++t) {
            if (!std::isfinite(day[t]) || day[t] < 0.0) {
                throw ValidationError("volumes must be finite and non-negative");
            }
            mean[t] += day[t];
        }
    }
    double total = 0.0;
    for (double& m : mean) {
        m /= static_cast<double>(volume_profiles.size());
        total += m;
    }
    VwapSchedule out;
    if (total <= 0.0) {
        out.schedule = twap_schedule(steps);
        out.twap_fallback = true;
        return out;
    }
    out.schedule.fractions.resize(static_cast<std::size_t>(steps));
    for (int t = 0; t < steps; ++t) out.schedule.fractions[t] = mean[t] / total;
    return out;
}

EquityCurve buy_and_hold_curve(std::span<const std::int64_t> timestamps,
                               const std::vector<std::vector<double>>& closes_by_step,
                               double capital, double fee_rate, double periods_per_year) {
    if (capital <= 0.0) throw DomainError("buy_and_hold: capital must be positive");
    if (fee_rate < 0.0) throw DomainError("buy_and_hold: negative fee rate");
    if (closes_by_step.empty() || timestamps.size() != closes_by_step.size()) {
        throw ValidationError("buy_and_hold: timestamps and price rows must align");
    }
    const std::size_t assets = closes_by_step[0].size();
    if (assets == 0) throw ValidationError("buy_and_hold: need at least 1 asset");
    for (const std::vector<double>& row : closes_by_step) {
        if (row.size() != assets) throw ValidationError("buy_and_hold: ragged price rows");
        for (double p : row) {
            if (!(p > 0.0)) throw ValidationError("buy_and_hold: prices must be positive");
        }
    }

    // Spend capital/D per asset; the quantity absorbs the fee so the
    // budget is used exactly and residual cash is zero.
    const double budget = capital / static_cast<double>(assets);
    std::vector<double> quantity(assets);
    for (std::size_t d = 0; d < assets; ++d) {
        quantity[d] = budget / (closes_by_step[0][d] * (1.0 + fee_rate));
    }

    EquityCurve curve;
    curve.periods_per_year = periods_per_year;
    curve.timestamps.assign(timestamps.begin(), timestamps.end());
    curve.values.resize(closes_by_step.size());
    for (std::size_t i = 0; i < closes_by_step.size(); ++i) {
        double value = 0.0;
        for (std::size_t d = 0; d < assets; ++d) value += quantity[d] * closes_by_step[i][d];
        curve.values[i] = value;
    }
    validate_curve(curve);
    return curve;
}

}  // namespace trendtune
