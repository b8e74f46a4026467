#include "trendtune/market_data.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_set>

#include "trendtune/errors.hpp"

namespace trendtune {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    // Plain comma-separated fields; quoting is not part of the format.
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& text, const char* field, int row) {
    const std::string t = trim(text);
    if (t.empty()) throw ParseError(std::string("empty ") + field + " in row " + std::to_string(row));
    errno = 0;
    char* end = nullptr;
    double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size() || errno == ERANGE) {
        throw ParseError(std::string("cannot parse ") + field + " '" + t + "' in row " + std::to_string(row));
    }
    return v;
}

std::int64_t parse_timestamp(const std::string& text, int row) {
    const std::string t = trim(text);
    if (t.empty()) throw ParseError("empty timestamp in row " + std::to_string(row));
    errno = 0;
    char* end = nullptr;
    long long v = std::strtoll(t.c_str(), &end, 10);
    if (end != t.c_str() + t.size() || errno == ERANGE) {
        throw ParseError("cannot parse timestamp '" + t + "' in row " + std::to_string(row));
    }
    return static_cast<std::int64_t>(v);
}

std::string file_stem(const std::string& path) {
    std::size_t slash = path.find_last_of("/\\");
    std::string name = slash == std::string::npos ? path : path.substr(slash + 1);
    std::size_t dot = name.find_last_of('.');
    return dot == std::string::npos ? name : name.substr(0, dot);
}

// Day-of-week for an epoch day; 0 = Sunday. Day 0 (1970-01-01) was a
// Thursday.
int day_of_week(std::int64_t epoch_day) {
    return static_cast<int>(((epoch_day + 4) % 7 + 7) % 7);
}

}  // namespace

std::vector<double> AssetSeries::closes() const {
    std::vector<double> out;
    out.reserve(bars.size());
    for (const Bar& b : bars) out.push_back(b.close);
    return out;
}

AssetSeries load_series(const std::string& path, const ColumnSchema& schema,
                        const std::string& asset_id, std::int64_t interval) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open bar file: " + path);

    std::string header_line;
    if (!std::getline(in, header_line)) throw ParseError("empty bar file: " + path);
    const std::vector<std::string> header = split_csv_line(header_line);

    auto column = [&](const std::string& name) -> int {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (trim(header[i]) == name) return static_cast<int>(i);
        }
        throw ConfigError("column '" + name + "' not found in " + path);
    };
    const int c_ts = column(schema.timestamp);
    const int c_open = column(schema.open);
    const int c_high = column(schema.high);
    const int c_low = column(schema.low);
    const int c_close = column(schema.close);
    const int c_vol = column(schema.volume);
    const int need = 1 + std::max({c_ts, c_open, c_high, c_low, c_close, c_vol});

    AssetSeries series;
    series.asset_id = asset_id.empty() ? file_stem(path) : asset_id;

    std::string line;
    int row = 0;  // 1-based index over data rows
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++row;
        const std::vector<std::string> fields = split_csv_line(line);
        if (static_cast<int>(fields.size()) < need) {
            throw ParseError("too few columns in row " + std::to_string(row));
        }
        Bar bar;
        bar.timestamp = parse_timestamp(fields[c_ts], row);
        bar.open = parse_double(fields[c_open], "open", row);
        bar.high = parse_double(fields[c_high], "high", row);
        bar.low = parse_double(fields[c_low], "low", row);
        bar.close = parse_double(fields[c_close], "close", row);
        bar.volume = parse_double(fields[c_vol], "volume", row);

        if (bar.open <= 0 || bar.high <= 0 || bar.low <= 0 || bar.close <= 0) {
            throw ValidationError("non-positive price in row " + std::to_string(row));
        }
        if (bar.high < bar.low) {
            throw ValidationError("high < low in row " + std::to_string(row));
        }
        if (bar.low > std::min(bar.open, bar.close)) {
            throw ValidationError("low above open/close in row " + std::to_string(row));
        }
        if (bar.high < std::max(bar.open, bar.close)) {
            throw ValidationError("high below open/close in row " + std::to_string(row));
        }
        if (bar.volume < 0) {
            throw ValidationError("negative volume in row " + std::to_string(row));
        }
        series.bars.push_back(bar);
    }
    if (series.bars.empty()) throw ValidationError("no bars in " + path);

    std::stable_sort(series.bars.begin(), series.bars.end(),
                     [](const Bar& a, const Bar& b) { return a.timestamp < b.timestamp; });
    for (std::size_t i = 1; i < series.bars.size(); ++i) {
        if (series.bars[i].timestamp == series.bars[i - 1].timestamp) {
            throw ValidationError("duplicate timestamp " + std::to_string(series.bars[i].timestamp) +
                                  " in " + path);
        }
    }

    if (interval > 0) {
        series.interval = interval;
    } else if (series.bars.size() >= 2) {
        std::int64_t best = std::numeric_limits<std::int64_t>::max();
        for (std::size_t i = 1; i < series.bars.size(); ++i) {
            best = std::min(best, series.bars[i].timestamp - series.bars[i - 1].timestamp);
        }
        series.interval = best;
    } else {
        throw ValidationError("cannot infer sampling interval from a single bar; pass it explicitly");
    }
    return series;
}

void export_series(const AssetSeries& series, const std::string& path, const ColumnSchema& schema) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write bar file: " + path);
    out << schema.timestamp << ',' << schema.open << ',' << schema.high << ',' << schema.low << ','
        << schema.close << ',' << schema.volume << '\n';
    char buf[256];
    for (const Bar& b : series.bars) {
        // %.17g keeps the shortest representation that still round-trips a
        // double exactly.
        std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.17g,%.17g,%.17g,%.17g",
                      static_cast<long long>(b.timestamp), b.open, b.high, b.low, b.close, b.volume);
        out << buf << '\n';
    }
    if (!out) throw ConfigError("failed writing bar file: " + path);
}

void validate_calendar(const AssetSeries& series, const Calendar& calendar) {
    if (series.bars.size() < 2) return;
    if (series.interval <= 0) throw ValidationError("series has no declared interval");

    if (calendar.kind == Calendar::Kind::continuous) {
        for (std::size_t i = 1; i < series.bars.size(); ++i) {
            const std::int64_t gap = series.bars[i].timestamp - series.bars[i - 1].timestamp;
            if (gap == series.interval) continue;
            if (gap > series.interval && gap % series.interval == 0) {
                throw ValidationError("missing bar at timestamp " +
                                      std::to_string(series.bars[i - 1].timestamp + series.interval));
            }
            throw ValidationError("off-grid bar at timestamp " +
                                  std::to_string(series.bars[i].timestamp));
        }
        return;
    }

    // Weekday calendar: one bar per trading day at a fixed time of day.
    if (series.interval != 86400) {
        throw ConfigError("weekday calendar requires a daily interval");
    }
    std::unordered_set<std::int64_t> holidays(calendar.holidays.begin(), calendar.holidays.end());
    auto is_trading_day = [&](std::int64_t day) {
        const int dow = day_of_week(day);
        return dow != 0 && dow != 6 && !holidays.count(day);
    };
    const std::int64_t offset =
        ((series.bars[0].timestamp % 86400) + 86400) % 86400;  // time of day, constant
    for (const Bar& b : series.bars) {
        const std::int64_t day_offset = ((b.timestamp % 86400) + 86400) % 86400;
        if (day_offset != offset) {
            throw ValidationError("off-grid bar at timestamp " + std::to_string(b.timestamp));
        }
        const std::int64_t day = (b.timestamp - day_offset) / 86400;
        if (!is_trading_day(day)) {
            throw ValidationError("bar on non-trading day at timestamp " + std::to_string(b.timestamp));
        }
    }
    for (std::size_t i = 1; i < series.bars.size(); ++i) {
        std::int64_t day = (series.bars[i - 1].timestamp - offset) / 86400 + 1;
        while (!is_trading_day(day)) ++day;
        const std::int64_t expected = day * 86400 + offset;
        if (series.bars[i].timestamp != expected) {
            throw ValidationError("missing bar at timestamp " + std::to_string(expected));
        }
    }
}

std::vector<RollingSplit> make_rolling_splits(const TimeRange& range, std::int64_t train_len,
                                              std::int64_t val_len, std::int64_t test_len,
                                              std::int64_t step) {
    if (train_len <= 0 || val_len <= 0 || test_len <= 0 || step <= 0) {
        throw ValidationError("split window lengths and step must be positive");
    }
    std::vector<RollingSplit> splits;
    const std::int64_t total = train_len + val_len + test_len;
    for (std::int64_t offset = 0; range.start + offset + total <= range.end; offset += step) {
        RollingSplit s;
        s.train = {range.start + offset, range.start + offset + train_len};
        s.validation = {s.train.end, s.train.end + val_len};
        s.test = {s.validation.end, s.validation.end + test_len};
        s.step = step;
        splits.push_back(s);
    }
    if (splits.empty()) {
        throw ValidationError("range too short for a single train/validation/test split");
    }
    return splits;
}

AssetSeries slice(const AssetSeries& series, const TimeRange& window) {
    AssetSeries out;
    out.asset_id = series.asset_id;
    out.interval = series.interval;
    for (const Bar& b : series.bars) {
        if (window.contains(b.timestamp)) out.bars.push_back(b);
    }
    return out;
}

std::size_t lower_bound_index(const AssetSeries& series, std::int64_t t) {
    auto it = std::lower_bound(series.bars.begin(), series.bars.end(), t,
                               [](const Bar& b, std::int64_t v) { return b.timestamp < v; });
    return static_cast<std::size_t>(it - series.bars.begin());
}

}  // namespace trendtune
