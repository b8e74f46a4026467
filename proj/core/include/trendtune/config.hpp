#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "trendtune/env_oe.hpp"
#include "trendtune/env_st.hpp"
#include "trendtune/indicators.hpp"
#include "trendtune/market_data.hpp"

namespace trendtune {

// One parsed `key = value` line of a sectioned config document.
struct IniEntry {
    std::string section;
    std::string key;
    std::string value;
    int line = 0;
};

// Parses the sectioned key/value format: `[section]` headers, one
// `key = value` per line, `#` comments, blank lines ignored. Duplicate
// keys within a section are errors.
std::vector<IniEntry> parse_ini(const std::string& text);

// "90" (seconds) or <integer><unit> with unit s, min, h, d, w,
// m/mo (30 days), y (365 days).
std::int64_t parse_duration(const std::string& text);

// Integer epoch seconds or a YYYY-MM-DD calendar date (UTC midnight).
std::int64_t parse_date(const std::string& text);

enum class RunMode { oe, st };
enum class MarketPreset { stock, crypto };
enum class PolicySource { toy, bias, external };

struct DataConfig {
    std::vector<std::string> paths;     // one tabular file per asset
    std::string index_path;             // optional market-index series
    ColumnSchema schema;
    std::int64_t interval = 0;          // 0 = infer from timestamps
    std::optional<Calendar> calendar;   // unset = skip gap validation
};

// Rolling-window lengths; zeros fall back to the preset protocol
// (train 180 d, validation 90 d, test 90 d, step 90 d).
struct SplitConfig {
    std::optional<std::int64_t> start;  // default: series extent
    std::optional<std::int64_t> end;
    std::int64_t train = 0;
    std::int64_t validation = 0;
    std::int64_t test = 0;
    std::int64_t step = 0;
};

struct SketchConfig {
    std::string template_path;  // empty or "default" = built-in template
    int window = kMarketFeatureWindow;
    bool normalize = false;
    double temp_lo = 0.1;
    double temp_hi = 10.0;
    double threshold_lo_pct = 0.01;
    double threshold_hi_pct = 0.99;
};

struct PolicyConfig {
    PolicySource source = PolicySource::toy;
    int ensemble = 1;  // 1 = single model, >= 2 = ensemble of that size
    std::vector<std::string> external_paths;
    // One logit vector per sub-policy for fixed-bias policies.
    std::vector<std::vector<double>> bias_logits;
    int toy_episodes = 200;
    double toy_learning_rate = 0.01;
};

struct EnvConfig {
    double gamma = 1.0;
    double alpha = 0.01;         // order-execution impact penalty
    double fee_rate = 0.001;
    ActionCaps caps;             // filled from the market preset
    bool margin = false;
    double margin_rate = 0.0775; // preset: 7.75% stock, 17.12% crypto
    double capital = 1000000.0;
    double periods_per_year = 252.0;  // preset: 252 stock, 1095 crypto (8h bars)
    int oe_order_steps = 0;      // 0 = one order per calendar day
    OrderSide oe_side = OrderSide::sell;
};

struct RunConfig {
    RunMode mode = RunMode::st;
    MarketPreset market = MarketPreset::stock;
    int budget = 20;                             // optimizer trial budget
    std::uint64_t seed = 0;                      // root seed for fitting
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};  // evaluation seeds
    std::string output_dir = "out";
    DataConfig data;
    SplitConfig split;
    SketchConfig sketch;
    PolicyConfig policy;
    EnvConfig env;
};

// Parses the document and applies market presets; unknown sections or
// keys are errors. Referenced paths are NOT checked here (see
// load_run_config).
RunConfig parse_run_config(const std::string& text);

// parse_run_config over the file's contents, with relative data/policy
// paths resolved against the config file's directory and required paths
// checked for existence.
RunConfig load_run_config(const std::string& path);

// Structural validation shared by both entry points: budget-independent
// invariants (seeds non-empty, positive rates, sane percentiles, policy
// source consistency).
void validate_run_config(const RunConfig& config);

const char* to_string(RunMode mode);
const char* to_string(MarketPreset market);
const char* to_string(PolicySource source);

}  // namespace trendtune
