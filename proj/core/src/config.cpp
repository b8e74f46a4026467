#include "trendtune/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "trendtune/errors.hpp"

namespace trendtune {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split_list(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) {
        item = trim(item);
        if (!item.empty()) parts.push_back(item);
    }
    return parts;
}

[[noreturn]] void fail_entry(const IniEntry& e, const std::string& msg) {
    throw ConfigError("config error: " + msg + " for '" + e.section + "." + e.key +
                      "' at line " + std::to_string(e.line));
}

double entry_double(const IniEntry& e) {
    const std::string v = trim(e.value);
    char* end = nullptr;
    const double parsed = std::strtod(v.c_str(), &end);
    if (end != v.c_str() + v.size() || v.empty() || !std::isfinite(parsed))
        fail_entry(e, "expected a finite number, got '" + e.value + "'");
    return parsed;
}

std::int64_t entry_int(const IniEntry& e) {
    const std::string v = trim(e.value);
    char* end = nullptr;
    const long long parsed = std::strtoll(v.c_str(), &end, 10);
    if (end != v.c_str() + v.size() || v.empty())
        fail_entry(e, "expected an integer, got '" + e.value + "'");
    return parsed;
}

bool entry_bool(const IniEntry& e) {
    std::string v = trim(e.value);
    std::transform(v.begin(), v.end(), v.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
    if (v == "false" || v == "no" || v == "off" || v == "0") return false;
    fail_entry(e, "expected a boolean, got '" + e.value + "'");
}

// Days since 1970-01-01 for a proleptic-Gregorian civil date
// (Howard Hinnant's days_from_civil).
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

}  // namespace

std::vector<IniEntry> parse_ini(const std::string& text) {
    std::vector<IniEntry> entries;
    std::set<std::pair<std::string, std::string>> seen;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::size_t hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        const std::string line = trim(raw);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ParseError("config error: unterminated section header", line_no);
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) throw ParseError("config error: empty section name", line_no);
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("config error: expected 'key = value'", line_no);
        IniEntry entry;
        entry.section = section;
        entry.key = trim(line.substr(0, eq));
        entry.value = trim(line.substr(eq + 1));
        entry.line = line_no;
        if (entry.key.empty()) throw ParseError("config error: empty key", line_no);
        if (!seen.insert({entry.section, entry.key}).second)
            throw ParseError(
                "config error: duplicate key '" + entry.section + "." + entry.key + "'", line_no);
        entries.push_back(std::move(entry));
    }
    return entries;
}

std::int64_t parse_duration(const std::string& text) {
    const std::string v = trim(text);
    if (v.empty()) throw ValidationError("empty duration");
    std::size_t i = 0;
    if (v[i] == '+') ++i;
    std::size_t digits = i;
    while (digits < v.size() && std::isdigit(static_cast<unsigned char>(v[digits]))) ++digits;
    if (digits == i) throw ValidationError("duration '" + text + "' must start with a number");
    const std::int64_t count = std::strtoll(v.substr(i, digits - i).c_str(), nullptr, 10);
    std::string unit = v.substr(digits);
    std::transform(unit.begin(), unit.end(), unit.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    std::int64_t scale = 0;
    if (unit.empty() || unit == "s")
        scale = 1;
    else if (unit == "min")
        scale = 60;
    else if (unit == "h")
        scale = 3600;
    else if (unit == "d")
        scale = 86400;
    else if (unit == "w")
        scale = 7 * 86400;
    else if (unit == "m" || unit == "mo")
        scale = 30 * 86400;  // calendar months are irregular; fixed 30-day months
    else if (unit == "y")
        scale = 365 * 86400;
    else
        throw ValidationError("unknown duration unit '" + unit + "' in '" + text + "'");
    return count * scale;
}

std::int64_t parse_date(const std::string& text) {
    const std::string v = trim(text);
    if (v.size() == 10 && v[4] == '-' && v[7] == '-') {
        const auto all_digits = [&](std::size_t from, std::size_t to) {
            for (std::size_t i = from; i < to; ++i)
                if (!std::isdigit(static_cast<unsigned char>(v[i]))) return false;
            return true;
        };
        if (!all_digits(0, 4) || !all_digits(5, 7) || !all_digits(8, 10))
            throw ValidationError("bad date '" + text + "' (expected YYYY-MM-DD or epoch seconds)");
        const std::int64_t y = std::strtoll(v.substr(0, 4).c_str(), nullptr, 10);
        const auto m = static_cast<unsigned>(std::strtoll(v.substr(5, 2).c_str(), nullptr, 10));
        const auto d = static_cast<unsigned>(std::strtoll(v.substr(8, 2).c_str(), nullptr, 10));
        if (m < 1 || m > 12 || d < 1 || d > 31)
            throw ValidationError("bad date '" + text + "' (month or day out of range)");
        return days_from_civil(y, m, d) * 86400;
    }
    char* end = nullptr;
    const long long parsed = std::strtoll(v.c_str(), &end, 10);
    if (v.empty() || end != v.c_str() + v.size())
        throw ValidationError("bad date '" + text + "' (expected YYYY-MM-DD or epoch seconds)");
    return parsed;
}

const char* to_string(RunMode mode) { return mode == RunMode::oe ? "oe" : "st"; }

const char* to_string(MarketPreset market) {
    return market == MarketPreset::stock ? "stock" : "crypto";
}

const char* to_string(PolicySource source) {
    switch (source) {
        case PolicySource::toy:
            return "toy";
        case PolicySource::bias:
            return "bias";
        case PolicySource::external:
            return "external";
    }
    return "?";
}

namespace {

void apply_market_preset(RunConfig& config) {
    if (config.market == MarketPreset::stock) {
        config.env.caps.unit = ActionCaps::Unit::shares;
        config.env.caps.max_units = 100;
        config.env.margin_rate = 0.0775;
        config.env.periods_per_year = 252.0;
    } else {
        config.env.caps.unit = ActionCaps::Unit::notional;
        config.env.caps.max_units = 100;
        config.env.caps.notional_cap = 100000.0;
        config.env.margin_rate = 0.1712;
        config.env.periods_per_year = 3.0 * 365.0;  // continuous 8-hour bars
    }
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
    const std::vector<IniEntry> entries = parse_ini(text);
    RunConfig config;

    // The market preset seeds several env defaults, so resolve it first.
    for (const auto& e : entries) {
        if (e.section == "run" && e.key == "market") {
            if (e.value == "stock")
                config.market = MarketPreset::stock;
            else if (e.value == "crypto")
                config.market = MarketPreset::crypto;
            else
                fail_entry(e, "expected 'stock' or 'crypto'");
        }
    }
    apply_market_preset(config);

    bool mode_set = false;
    std::vector<std::string> holiday_values;
    for (const auto& e : entries) {
        if (e.section == "run") {
            if (e.key == "mode") {
                if (e.value == "oe")
                    config.mode = RunMode::oe;
                else if (e.value == "st")
                    config.mode = RunMode::st;
                else
                    fail_entry(e, "expected 'oe' or 'st'");
                mode_set = true;
            } else if (e.key == "market") {
                // handled above
            } else if (e.key == "budget") {
                config.budget = static_cast<int>(entry_int(e));
            } else if (e.key == "seed") {
                config.seed = static_cast<std::uint64_t>(entry_int(e));
            } else if (e.key == "seeds") {
                config.seeds.clear();
                for (const auto& part : split_list(e.value, ',')) {
                    char* end = nullptr;
                    const long long s = std::strtoll(part.c_str(), &end, 10);
                    if (end != part.c_str() + part.size() || s < 0)
                        fail_entry(e, "expected a comma-separated list of non-negative integers");
                    config.seeds.push_back(static_cast<std::uint64_t>(s));
                }
            } else if (e.key == "output_dir") {
                config.output_dir = e.value;
            } else {
                fail_entry(e, "unknown key");
            }
        } else if (e.section == "data") {
            if (e.key == "path" || e.key == "paths") {
                for (auto& p : split_list(e.value, ',')) config.data.paths.push_back(p);
            } else if (e.key == "index_path") {
                config.data.index_path = e.value;
            } else if (e.key == "column_timestamp") {
                config.data.schema.timestamp = e.value;
            } else if (e.key == "column_open") {
                config.data.schema.open = e.value;
            } else if (e.key == "column_high") {
                config.data.schema.high = e.value;
            } else if (e.key == "column_low") {
                config.data.schema.low = e.value;
            } else if (e.key == "column_close") {
                config.data.schema.close = e.value;
            } else if (e.key == "column_volume") {
                config.data.schema.volume = e.value;
            } else if (e.key == "interval") {
                config.data.interval = parse_duration(e.value);
            } else if (e.key == "calendar") {
                Calendar cal;
                if (e.value == "continuous")
                    cal.kind = Calendar::Kind::continuous;
                else if (e.value == "weekdays")
                    cal.kind = Calendar::Kind::weekdays;
                else
                    fail_entry(e, "expected 'continuous' or 'weekdays'");
                if (config.data.calendar) cal.holidays = config.data.calendar->holidays;
                config.data.calendar = cal;
            } else if (e.key == "holidays") {
                if (!config.data.calendar) config.data.calendar = Calendar{};
                for (const auto& part : split_list(e.value, ','))
                    config.data.calendar->holidays.push_back(parse_date(part) / 86400);
            } else {
                fail_entry(e, "unknown key");
            }
        } else if (e.section == "split") {
            if (e.key == "start")
                config.split.start = parse_date(e.value);
            else if (e.key == "end")
                config.split.end = parse_date(e.value);
            else if (e.key == "train")
                config.split.train = parse_duration(e.value);
            else if (e.key == "validation")
                config.split.validation = parse_duration(e.value);
            else if (e.key == "test")
                config.split.test = parse_duration(e.value);
            else if (e.key == "step")
                config.split.step = parse_duration(e.value);
            else
                fail_entry(e, "unknown key");
        } else if (e.section == "sketch") {
            if (e.key == "template")
                config.sketch.template_path = e.value;
            else if (e.key == "window")
                config.sketch.window = static_cast<int>(entry_int(e));
            else if (e.key == "normalize")
                config.sketch.normalize = entry_bool(e);
            else if (e.key == "temp_lo")
                config.sketch.temp_lo = entry_double(e);
            else if (e.key == "temp_hi")
                config.sketch.temp_hi = entry_double(e);
            else if (e.key == "threshold_lo_pct")
                config.sketch.threshold_lo_pct = entry_double(e);
            else if (e.key == "threshold_hi_pct")
                config.sketch.threshold_hi_pct = entry_double(e);
            else
                fail_entry(e, "unknown key");
        } else if (e.section == "policy") {
            if (e.key == "source") {
                if (e.value == "toy")
                    config.policy.source = PolicySource::toy;
                else if (e.value == "bias")
                    config.policy.source = PolicySource::bias;
                else if (e.value == "external")
                    config.policy.source = PolicySource::external;
                else
                    fail_entry(e, "expected 'toy', 'bias' or 'external'");
            } else if (e.key == "ensemble") {
                config.policy.ensemble = static_cast<int>(entry_int(e));
            } else if (e.key == "external_paths") {
                config.policy.external_paths = split_list(e.value, ',');
            } else if (e.key == "bias_logits") {
                // One vector per sub-policy: vectors separated by ';',
                // entries by ','.
                config.policy.bias_logits.clear();
                for (const auto& vec : split_list(e.value, ';')) {
                    std::vector<double> logits;
                    for (const auto& part : split_list(vec, ',')) {
                        char* end = nullptr;
                        const double x = std::strtod(part.c_str(), &end);
                        if (end != part.c_str() + part.size() || !std::isfinite(x))
                            fail_entry(e, "expected finite numbers");
                        logits.push_back(x);
                    }
                    if (!logits.empty()) config.policy.bias_logits.push_back(std::move(logits));
                }
            } else if (e.key == "toy_episodes") {
                config.policy.toy_episodes = static_cast<int>(entry_int(e));
            } else if (e.key == "toy_learning_rate") {
                config.policy.toy_learning_rate = entry_double(e);
            } else {
                fail_entry(e, "unknown key");
            }
        } else if (e.section == "env") {
            if (e.key == "gamma")
                config.env.gamma = entry_double(e);
            else if (e.key == "alpha")
                config.env.alpha = entry_double(e);
            else if (e.key == "fee")
                config.env.fee_rate = entry_double(e);
            else if (e.key == "max_units")
                config.env.caps.max_units = static_cast<int>(entry_int(e));
            else if (e.key == "notional_cap")
                config.env.caps.notional_cap = entry_double(e);
            else if (e.key == "margin")
                config.env.margin = entry_bool(e);
            else if (e.key == "margin_rate")
                config.env.margin_rate = entry_double(e);
            else if (e.key == "capital")
                config.env.capital = entry_double(e);
            else if (e.key == "periods_per_year")
                config.env.periods_per_year = entry_double(e);
            else if (e.key == "oe_order_steps")
                config.env.oe_order_steps = static_cast<int>(entry_int(e));
            else if (e.key == "oe_side") {
                if (e.value == "sell")
                    config.env.oe_side = OrderSide::sell;
                else if (e.value == "buy")
                    config.env.oe_side = OrderSide::buy;
                else
                    fail_entry(e, "expected 'sell' or 'buy'");
            } else {
                fail_entry(e, "unknown key");
            }
        } else {
            fail_entry(e, "unknown section");
        }
    }
    if (!mode_set) throw ConfigError("config error: required key 'run.mode' is missing");

    validate_run_config(config);
    return config;
}

void validate_run_config(const RunConfig& config) {
    if (config.budget < 1) throw ConfigError("run.budget must be >= 1");
    if (config.seeds.empty()) throw ConfigError("run.seeds must list at least one seed");
    if (config.data.paths.empty()) throw ConfigError("data.path must name at least one series file");
    if (config.sketch.window < 2) throw ConfigError("sketch.window must be >= 2");
    if (!(config.sketch.temp_lo > 0.0) || !(config.sketch.temp_hi >= config.sketch.temp_lo))
        throw ConfigError("sketch temperature range must be positive with lo <= hi");
    if (!(config.sketch.threshold_lo_pct >= 0.0) ||
        !(config.sketch.threshold_hi_pct <= 1.0) ||
        !(config.sketch.threshold_lo_pct <= config.sketch.threshold_hi_pct))
        throw ConfigError("sketch threshold percentiles must satisfy 0 <= lo <= hi <= 1");
    if (!(config.env.gamma > 0.0) || config.env.gamma > 1.0)
        throw ConfigError("env.gamma must lie in (0, 1]");
    if (config.env.alpha < 0.0) throw ConfigError("env.alpha must be >= 0");
    if (config.env.fee_rate < 0.0 || config.env.fee_rate >= 1.0)
        throw ConfigError("env.fee must lie in [0, 1)");
    if (config.env.caps.max_units < 1) throw ConfigError("env.max_units must be >= 1");
    if (!(config.env.capital > 0.0)) throw ConfigError("env.capital must be positive");
    if (!(config.env.periods_per_year > 0.0))
        throw ConfigError("env.periods_per_year must be positive");
    if (config.env.margin_rate < 0.0) throw ConfigError("env.margin_rate must be >= 0");
    if (config.env.oe_order_steps < 0) throw ConfigError("env.oe_order_steps must be >= 0");
    if (config.policy.ensemble < 1)
        throw ConfigError("policy.ensemble must be >= 1 (1 = single model)");
    if (config.policy.source == PolicySource::external &&
        static_cast<int>(config.policy.external_paths.size()) != config.policy.ensemble)
        throw ConfigError("policy.external_paths must list exactly one file per sub-policy");
    if (config.policy.source == PolicySource::bias) {
        if (static_cast<int>(config.policy.bias_logits.size()) != config.policy.ensemble)
            throw ConfigError("policy.bias_logits must list exactly one vector per sub-policy");
        for (const auto& logits : config.policy.bias_logits)
            if (logits.size() < 2)
                throw ConfigError("each policy.bias_logits vector needs >= 2 entries");
    }
    if (config.policy.source == PolicySource::toy) {
        if (config.policy.toy_episodes < 1) throw ConfigError("policy.toy_episodes must be >= 1");
        if (!(config.policy.toy_learning_rate >= 0.0))
            throw ConfigError("policy.toy_learning_rate must be >= 0");
    }
    const auto& split = config.split;
    if (split.start && split.end && *split.start >= *split.end)
        throw ConfigError("split.start must precede split.end");
    for (std::int64_t len : {split.train, split.validation, split.test, split.step})
        if (len < 0) throw ConfigError("split lengths must be non-negative durations");
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    RunConfig config = parse_run_config(buf.str());

    // Relative paths in the document are relative to the document.
    const std::filesystem::path base = std::filesystem::path(path).parent_path();
    const auto resolve = [&](std::string& p) {
        if (p.empty()) return;
        std::filesystem::path fp(p);
        if (fp.is_relative()) p = (base / fp).string();
    };
    for (auto& p : config.data.paths) resolve(p);
    resolve(config.data.index_path);
    if (config.sketch.template_path != "default") resolve(config.sketch.template_path);
    for (auto& p : config.policy.external_paths) resolve(p);

    for (const auto& p : config.data.paths)
        if (!std::filesystem::exists(p))
            throw ConfigError("data series file '" + p + "' does not exist");
    if (!config.data.index_path.empty() && !std::filesystem::exists(config.data.index_path))
        throw ConfigError("index series file '" + config.data.index_path + "' does not exist");
    if (!config.sketch.template_path.empty() && config.sketch.template_path != "default" &&
        !std::filesystem::exists(config.sketch.template_path))
        throw ConfigError("sketch template file '" + config.sketch.template_path +
                          "' does not exist");
    for (const auto& p : config.policy.external_paths)
        if (!std::filesystem::exists(p))
            throw ConfigError("policy logits file '" + p + "' does not exist");
    return config;
}

}  // namespace trendtune
