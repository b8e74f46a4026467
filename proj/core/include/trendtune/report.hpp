#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "trendtune/config.hpp"
#include "trendtune/metrics.hpp"
#include "trendtune/optimizer.hpp"
#include "trendtune/sketch.hpp"

namespace trendtune {

// Outcome of one seeded test-window run.
struct SeedResult {
    std::uint64_t seed = 0;
    MetricReport metrics;
    EquityCurve curve;  // trading runs only; order-execution runs leave it empty
};

// Cross-seed mean and population standard deviation per metric name.
// Non-finite values (e.g. a gain/loss ratio of +inf) and absent values
// (an undefined Sharpe ratio) are excluded; a metric with no finite
// sample is omitted entirely.
struct MetricAggregate {
    std::map<std::string, double> mean;
    std::map<std::string, double> stdev;
};

// The complete, self-describing output of one backtest: everything
// needed to reproduce the numbers is embedded (fitted parameters, the
// rule text they fill, per-seed metrics, curves, trial history).
struct RunReport {
    std::string version;
    std::string label;         // strategy name used in comparison tables
    RunMode mode = RunMode::st;
    std::string generated_at;  // wall-clock stamp; excluded from determinism
    TimeRange test_window;
    std::string sketch_rules;  // canonical rendering of the tuned template
    SketchMode sketch_mode;
    SketchParams params;
    std::vector<std::string> trial_dims;
    std::vector<Trial> trials;
    std::vector<SeedResult> seeds;
    std::vector<std::pair<std::int64_t, TrendLabel>> trend_timeline;
    MetricAggregate aggregate;
    std::string config_echo;  // original config document text
};

// Metric names in table order for one flavor (pa/arr/glr/pos or
// ar/cr/av/md/sr).
std::vector<std::string> metric_names(MetricReport::Flavor flavor);

// The named metric's value if defined and finite.
std::optional<double> metric_value(const MetricReport& metrics, const std::string& name);

MetricAggregate compute_aggregate(std::span<const SeedResult> seeds);

// Fills aggregate (from the seeds) and version; label defaults to "run".
void finalize_report(RunReport& report);

// Machine-readable document. Deterministic except for generated_at:
// equal reports serialize to equal bytes.
std::string report_to_json(const RunReport& report);
RunReport report_from_json(const std::string& text);
void save_report(const RunReport& report, const std::string& path);
RunReport load_report(const std::string& path);

// Human-readable rendering of one report.
std::string render_text(const RunReport& report);

// Aligned comparison table: one row per report, one column per metric
// (aggregate mean ± std). All reports must share mode and test window.
std::string render_comparison(std::span<const RunReport> reports);

}  // namespace trendtune
