#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace trendtune {

// One OHLCV bar. Timestamps are epoch seconds, UTC.
struct Bar {
    std::int64_t timestamp = 0;
    double open = 0.0;
    double high = 0.0;
    double low = 0.0;
    double close = 0.0;
    double volume = 0.0;
};

// Half-open interval [start, end) over epoch seconds.
struct TimeRange {
    std::int64_t start = 0;
    std::int64_t end = 0;

    bool contains(std::int64_t t) const { return t >= start && t < end; }
    std::int64_t length() const { return end - start; }
};

// Bars for a single asset at a fixed sampling interval.
struct AssetSeries {
    std::string asset_id;
    std::int64_t interval = 0;  // seconds between consecutive bars
    std::vector<Bar> bars;

    std::vector<double> closes() const;
};

// Which trading grid a series is expected to live on. A continuous
// calendar expects a bar every `interval` seconds; a weekday calendar
// additionally skips Saturdays, Sundays and listed holidays.
struct Calendar {
    enum class Kind { continuous, weekdays };
    Kind kind = Kind::continuous;
    // Holiday dates as epoch days (timestamp / 86400), exempt from the
    // weekday grid.
    std::vector<std::int64_t> holidays;
};

// Maps CSV column names onto bar fields. Defaults match the common
// lowercase convention.
struct ColumnSchema {
    std::string timestamp = "timestamp";
    std::string open = "open";
    std::string high = "high";
    std::string low = "low";
    std::string close = "close";
    std::string volume = "volume";
};

// One train/validation/test window of a rolling evaluation.
struct RollingSplit {
    TimeRange train;
    TimeRange validation;
    TimeRange test;
    std::int64_t step = 0;  // advance between consecutive splits, seconds
};

// Loads a CSV of bars. Rows may appear out of order; they are sorted by
// timestamp before validation. Throws ParseError for malformed text and
// ValidationError for rows that break price/volume invariants or repeat
// a timestamp. `asset_id` defaults to the file stem; `interval` <= 0
// means "infer from the smallest gap between consecutive bars".
AssetSeries load_series(const std::string& path, const ColumnSchema& schema = {},
                        const std::string& asset_id = "", std::int64_t interval = 0);

// Writes bars back to CSV with full double precision, so a load of the
// written file reproduces the series bit for bit.
void export_series(const AssetSeries& series, const std::string& path,
                   const ColumnSchema& schema = {});

// Checks bars against the expected grid. Throws ValidationError on a
// missing or off-grid bar, naming the offending timestamp.
void validate_calendar(const AssetSeries& series, const Calendar& calendar);

// Enumerates rolling train/validation/test windows: the first training
// window starts at range.start, each subsequent split advances by `step`
// seconds, and splits are emitted while the test window still fits inside
// the range. Throws ValidationError if no split fits or any length is
// non-positive.
std::vector<RollingSplit> make_rolling_splits(const TimeRange& range, std::int64_t train_len,
                                              std::int64_t val_len, std::int64_t test_len,
                                              std::int64_t step);

// Bars whose timestamps fall inside the half-open window. Asset id and
// interval carry over.
AssetSeries slice(const AssetSeries& series, const TimeRange& window);

// Index of the first bar with timestamp >= t, or bars.size().
std::size_t lower_bound_index(const AssetSeries& series, std::int64_t t);

}  // namespace trendtune
