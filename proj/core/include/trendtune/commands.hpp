#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "trendtune/config.hpp"
#include "trendtune/env_oe.hpp"
#include "trendtune/env_st.hpp"
#include "trendtune/fitting.hpp"
#include "trendtune/market_data.hpp"
#include "trendtune/policy.hpp"
#include "trendtune/report.hpp"
#include "trendtune/sketch.hpp"

namespace trendtune {

// Everything the fit and backtest pipelines share: the parsed config,
// the loaded series, the rule template (mode applied) and the rolling
// splits over the configured range.
struct PreparedRun {
    RunConfig config;
    std::string config_text;
    std::vector<AssetSeries> assets;
    std::optional<AssetSeries> index;
    SketchTemplate tmpl;
    std::vector<RollingSplit> splits;
    std::shared_ptr<const StMarket> market;  // built for trading runs only
};

PreparedRun prepare_run(const std::string& config_path);

// Splits a series' in-window bars into parent orders: one per UTC day
// when `steps` is 0, else consecutive chunks of exactly `steps` bars
// (trailing partial chunks are dropped). Each order carries up to
// 2·feature_window closes of pre-window history for trend warm-up;
// groups with less than feature_window bars of history are skipped when
// feature_window > 0.
std::vector<OrderTask> build_orders(const AssetSeries& series, const TimeRange& window, int steps,
                                    OrderSide side, int feature_window);

// The frozen sub-policies for one split (one entry in single-model
// runs). Toy policies train on the split's training window with seeds
// derived from the config's root seed, so refitting and backtesting
// rebuild identical policies.
std::vector<std::shared_ptr<const FrozenPolicy>> build_policies(const PreparedRun& run,
                                                                const RollingSplit& split,
                                                                int split_index,
                                                                int expected_actions);

// Wraps the sub-policies and parameters as the executable tuned policy.
TunedPolicy make_tuned_policy(const std::vector<std::shared_ptr<const FrozenPolicy>>& policies,
                              const SketchTemplate& tmpl, const SketchParams& params);

struct FitOutputs {
    std::vector<std::string> param_files;    // one per rolling split
    std::vector<std::string> history_files;  // trial log per split
    std::vector<FitResult> results;
};

// Fits the sketch per rolling split on validation data and writes the
// parameter + trial-history files into the config's output directory.
FitOutputs cmd_fit(const std::string& config_path);

// Executes the tuned policy over every split's test window for each
// configured seed and assembles (and saves) the run report. Expects one
// parameter file per split, in split order.
RunReport cmd_backtest(const std::string& config_path, const std::vector<std::string>& param_files,
                       const std::string& label = "");

struct IngestSummary {
    std::string asset_id;
    std::size_t bars = 0;
    std::int64_t interval = 0;
    TimeRange range;  // [first bar, last bar + interval)
    double min_close = 0.0;
    double max_close = 0.0;
};

// Loads and validates the configured series; optionally re-exports them
// into `export_dir` (full precision, round-trip safe).
std::vector<IngestSummary> cmd_ingest(const std::string& config_path,
                                      const std::string& export_dir = "");

// Renders the cross-report comparison table; with `export_dir` set, also
// writes each report's per-seed equity curves as CSV.
std::string cmd_report(const std::vector<std::string>& report_paths,
                       const std::string& export_dir = "");

// Parses and validates a rule file; returns a short summary plus the
// canonical rendering. `ensemble` = 1 checks single-model mode.
std::string cmd_sketch_check(const std::string& rule_path, int ensemble = 1);

}  // namespace trendtune
