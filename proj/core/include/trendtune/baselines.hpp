#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "trendtune/metrics.hpp"

namespace trendtune {

// Per-step order allocation fractions; non-negative, summing to 1.
struct Schedule {
    std::vector<double> fractions;
};

void validate_schedule(const Schedule& schedule, double tol = 1e-12);

// Uniform allocation a_t = 1/T. The division happens once, so every
// entry holds the identical double and a scheduled run reproduces the
// horizon's mean price bit for bit.
Schedule twap_schedule(int steps);

struct VwapSchedule {
    Schedule schedule;
    bool twap_fallback = false;  // set when history had no volume signal
};

// Allocation proportional to the slot-wise mean of historical per-step
// volumes. Each profile must have exactly `steps` entries. All-zero
// volume falls back to TWAP with the fallback flag set.
VwapSchedule vwap_schedule(const std::vector<std::vector<double>>& volume_profiles, int steps);

// Equal-capital buy-and-hold: capital/D spent per asset at the first
// step (quantity chosen so cost including fees spends the budget
// exactly), positions held to the end. closes_by_step[i] holds the D
// close prices at step i.
EquityCurve buy_and_hold_curve(std::span<const std::int64_t> timestamps,
                               const std::vector<std::vector<double>>& closes_by_step,
                               double capital, double fee_rate, double periods_per_year);

}  // namespace trendtune
