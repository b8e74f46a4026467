#include "trendtune/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "trendtune/errors.hpp"
#include "trendtune/version.hpp"

namespace trendtune {

namespace {

using ordered_json = nlohmann::ordered_json;

// Doubles serialize as JSON numbers; the two values JSON cannot carry
// get sentinel encodings: ±infinity as "inf"/"-inf", NaN as null.
ordered_json encode_double(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return nullptr;
    return v > 0 ? ordered_json("inf") : ordered_json("-inf");
}

double decode_double(const ordered_json& j, const char* what) {
    if (j.is_number()) return j.get<double>();
    if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
    }
    throw ParseError(std::string("report parse error: bad numeric value for ") + what);
}

std::string utc_now() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
    return buf;
}

std::string format_metric(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

ordered_json curve_to_json(const EquityCurve& curve) {
    ordered_json j;
    j["periods_per_year"] = curve.periods_per_year;
    j["timestamps"] = curve.timestamps;
    j["values"] = curve.values;
    return j;
}

EquityCurve curve_from_json(const ordered_json& j) {
    EquityCurve curve;
    curve.periods_per_year = j.at("periods_per_year").get<double>();
    curve.timestamps = j.at("timestamps").get<std::vector<std::int64_t>>();
    curve.values = j.at("values").get<std::vector<double>>();
    if (!curve.values.empty()) validate_curve(curve);
    return curve;
}

ordered_json metrics_to_json(const MetricReport& m) {
    ordered_json j;
    if (m.flavor == MetricReport::Flavor::oe) {
        j["flavor"] = "oe";
        j["pa"] = encode_double(m.oe.pa);
        j["arr"] = encode_double(m.oe.arr);
        j["glr"] = encode_double(m.oe.glr);
        j["pos"] = encode_double(m.oe.pos);
        j["orders"] = m.oe.orders;
    } else {
        j["flavor"] = "st";
        j["ar"] = encode_double(m.st.ar);
        j["cr"] = encode_double(m.st.cr);
        j["av"] = encode_double(m.st.av);
        j["md"] = encode_double(m.st.md);
        j["sr"] = m.st.sr ? encode_double(*m.st.sr) : ordered_json(nullptr);
        j["periods"] = m.st.periods;
    }
    return j;
}

MetricReport metrics_from_json(const ordered_json& j) {
    MetricReport m;
    const std::string flavor = j.at("flavor").get<std::string>();
    if (flavor == "oe") {
        m.flavor = MetricReport::Flavor::oe;
        m.oe.pa = decode_double(j.at("pa"), "pa");
        m.oe.arr = decode_double(j.at("arr"), "arr");
        m.oe.glr = decode_double(j.at("glr"), "glr");
        m.oe.pos = decode_double(j.at("pos"), "pos");
        m.oe.orders = j.at("orders").get<int>();
    } else if (flavor == "st") {
        m.flavor = MetricReport::Flavor::st;
        m.st.ar = decode_double(j.at("ar"), "ar");
        m.st.cr = decode_double(j.at("cr"), "cr");
        m.st.av = decode_double(j.at("av"), "av");
        m.st.md = decode_double(j.at("md"), "md");
        if (!j.at("sr").is_null()) m.st.sr = decode_double(j.at("sr"), "sr");
        m.st.periods = j.at("periods").get<int>();
    } else {
        throw ParseError("report parse error: unknown metric flavor '" + flavor + "'");
    }
    return m;
}

}  // namespace

std::vector<std::string> metric_names(MetricReport::Flavor flavor) {
    if (flavor == MetricReport::Flavor::oe) return {"pa", "arr", "glr", "pos"};
    return {"ar", "cr", "av", "md", "sr"};
}

std::optional<double> metric_value(const MetricReport& metrics, const std::string& name) {
    double v = std::numeric_limits<double>::quiet_NaN();
    if (metrics.flavor == MetricReport::Flavor::oe) {
        if (name == "pa")
            v = metrics.oe.pa;
        else if (name == "arr")
            v = metrics.oe.arr;
        else if (name == "glr")
            v = metrics.oe.glr;
        else if (name == "pos")
            v = metrics.oe.pos;
    } else {
        if (name == "ar")
            v = metrics.st.ar;
        else if (name == "cr")
            v = metrics.st.cr;
        else if (name == "av")
            v = metrics.st.av;
        else if (name == "md")
            v = metrics.st.md;
        else if (name == "sr")
            v = metrics.st.sr.value_or(std::numeric_limits<double>::quiet_NaN());
    }
    if (!std::isfinite(v)) return std::nullopt;
    return v;
}

MetricAggregate compute_aggregate(std::span<const SeedResult> seeds) {
    MetricAggregate agg;
    if (seeds.empty()) return agg;
    for (const auto& name : metric_names(seeds.front().metrics.flavor)) {
        std::vector<double> values;
        for (const auto& s : seeds)
            if (const auto v = metric_value(s.metrics, name)) values.push_back(*v);
        if (values.empty()) continue;
        double mean = 0.0;
        for (double v : values) mean += v;
        mean /= static_cast<double>(values.size());
        double var = 0.0;
        for (double v : values) var += (v - mean) * (v - mean);
        var /= static_cast<double>(values.size());
        agg.mean[name] = mean;
        agg.stdev[name] = std::sqrt(var);
    }
    return agg;
}

void finalize_report(RunReport& report) {
    report.version = kVersion;
    if (report.label.empty()) report.label = "run";
    if (report.generated_at.empty()) report.generated_at = utc_now();
    report.aggregate = compute_aggregate(report.seeds);
}

std::string report_to_json(const RunReport& report) {
    ordered_json j;
    j["version"] = report.version;
    j["label"] = report.label;
    j["mode"] = to_string(report.mode);
    j["generated_at"] = report.generated_at;
    j["test_window"] = {{"start", report.test_window.start}, {"end", report.test_window.end}};

    ordered_json sketch;
    sketch["mode"] =
        report.sketch_mode.kind == SketchMode::Kind::single ? "single" : "ensemble";
    sketch["ensemble_size"] = report.sketch_mode.ensemble_size;
    sketch["rules"] = report.sketch_rules;
    const SketchTemplate tmpl = parse_sketch(report.sketch_rules, report.sketch_mode);
    sketch["params"] = ordered_json::parse(params_to_json(tmpl, report.params));
    j["sketch"] = sketch;

    ordered_json trials;
    trials["dims"] = report.trial_dims;
    ordered_json rows = ordered_json::array();
    for (const auto& t : report.trials) {
        ordered_json row = ordered_json::array();
        row.push_back(t.index);
        for (double c : t.point) row.push_back(encode_double(c));
        row.push_back(encode_double(t.objective));
        rows.push_back(std::move(row));
    }
    trials["rows"] = std::move(rows);
    j["trials"] = std::move(trials);

    ordered_json seeds = ordered_json::array();
    for (const auto& s : report.seeds) {
        ordered_json row;
        row["seed"] = s.seed;
        row["metrics"] = metrics_to_json(s.metrics);
        row["curve"] = curve_to_json(s.curve);
        seeds.push_back(std::move(row));
    }
    j["seeds"] = std::move(seeds);

    ordered_json timeline = ordered_json::array();
    for (const auto& [ts, label] : report.trend_timeline)
        timeline.push_back(ordered_json::array({ts, to_string(label)}));
    j["trend_timeline"] = std::move(timeline);

    ordered_json aggregate;
    ordered_json mean;
    for (const auto& [k, v] : report.aggregate.mean) mean[k] = v;
    ordered_json stdev;
    for (const auto& [k, v] : report.aggregate.stdev) stdev[k] = v;
    aggregate["mean"] = std::move(mean);
    aggregate["stdev"] = std::move(stdev);
    j["aggregate"] = std::move(aggregate);

    j["config_echo"] = report.config_echo;
    return j.dump(2) + "\n";
}

RunReport report_from_json(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("report parse error: ") + e.what());
    }
    try {
        RunReport report;
        report.version = j.at("version").get<std::string>();
        report.label = j.at("label").get<std::string>();
        const std::string mode = j.at("mode").get<std::string>();
        if (mode == "oe")
            report.mode = RunMode::oe;
        else if (mode == "st")
            report.mode = RunMode::st;
        else
            throw ParseError("report parse error: unknown mode '" + mode + "'");
        report.generated_at = j.at("generated_at").get<std::string>();
        report.test_window.start = j.at("test_window").at("start").get<std::int64_t>();
        report.test_window.end = j.at("test_window").at("end").get<std::int64_t>();

        const auto& sketch = j.at("sketch");
        const std::string kind = sketch.at("mode").get<std::string>();
        if (kind == "single")
            report.sketch_mode = SketchMode::single_model();
        else if (kind == "ensemble")
            report.sketch_mode = SketchMode::ensemble(sketch.at("ensemble_size").get<int>());
        else
            throw ParseError("report parse error: unknown sketch mode '" + kind + "'");
        report.sketch_rules = sketch.at("rules").get<std::string>();
        const SketchTemplate tmpl = parse_sketch(report.sketch_rules, report.sketch_mode);
        report.params = params_from_json(tmpl, sketch.at("params").dump());

        const auto& trials = j.at("trials");
        report.trial_dims = trials.at("dims").get<std::vector<std::string>>();
        for (const auto& row : trials.at("rows")) {
            if (!row.is_array() || row.size() != report.trial_dims.size() + 2)
                throw ParseError("report parse error: trial row width mismatch");
            Trial t;
            t.index = row.at(0).get<int>();
            for (std::size_t i = 1; i + 1 < row.size(); ++i)
                t.point.push_back(decode_double(row.at(i), "trial point"));
            t.objective = decode_double(row.at(row.size() - 1), "trial objective");
            report.trials.push_back(std::move(t));
        }

        for (const auto& row : j.at("seeds")) {
            SeedResult s;
            s.seed = row.at("seed").get<std::uint64_t>();
            s.metrics = metrics_from_json(row.at("metrics"));
            s.curve = curve_from_json(row.at("curve"));
            report.seeds.push_back(std::move(s));
        }

        for (const auto& row : j.at("trend_timeline")) {
            if (!row.is_array() || row.size() != 2)
                throw ParseError("report parse error: timeline entry must be [timestamp, label]");
            const auto label = trend_from_string(row.at(1).get<std::string>());
            if (!label)
                throw ParseError("report parse error: unknown trend label '" +
                                 row.at(1).get<std::string>() + "'");
            report.trend_timeline.emplace_back(row.at(0).get<std::int64_t>(), *label);
        }

        const auto& aggregate = j.at("aggregate");
        for (const auto& [k, v] : aggregate.at("mean").items())
            report.aggregate.mean[k] = v.get<double>();
        for (const auto& [k, v] : aggregate.at("stdev").items())
            report.aggregate.stdev[k] = v.get<double>();

        report.config_echo = j.at("config_echo").get<std::string>();
        return report;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("report parse error: ") + e.what());
    }
}

void save_report(const RunReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open report file '" + path + "' for writing");
    out << report_to_json(report);
    if (!out) throw ConfigError("failed writing report file '" + path + "'");
}

RunReport load_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open report file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return report_from_json(buf.str());
}

std::string render_text(const RunReport& report) {
    std::ostringstream out;
    out << "run report (version " << report.version << ")\n";
    out << "label: " << report.label << "\n";
    out << "mode: " << to_string(report.mode) << "\n";
    out << "generated: " << report.generated_at << "\n";
    out << "test window: [" << report.test_window.start << ", " << report.test_window.end
        << ")\n";
    out << "trend rules:\n";
    std::istringstream rules(report.sketch_rules);
    std::string line;
    while (std::getline(rules, line)) out << "  " << line << "\n";
    out << "parameters:\n";
    const SketchTemplate tmpl = parse_sketch(report.sketch_rules, report.sketch_mode);
    const ordered_json params = ordered_json::parse(params_to_json(tmpl, report.params));
    for (const auto& [k, v] : params.items()) out << "  " << k << " = " << v.dump() << "\n";
    out << "trials: " << report.trials.size() << "\n";
    out << "seeds (" << report.seeds.size() << "):\n";
    const auto names =
        metric_names(report.mode == RunMode::oe ? MetricReport::Flavor::oe
                                                : MetricReport::Flavor::st);
    for (const auto& s : report.seeds) {
        out << "  seed " << s.seed << ":";
        for (const auto& name : names) {
            out << " " << name << "=";
            if (const auto v = metric_value(s.metrics, name))
                out << format_metric(*v);
            else
                out << "-";
        }
        out << "\n";
    }
    out << "aggregate (mean +/- std):\n";
    for (const auto& name : names) {
        out << "  " << name << " = ";
        const auto mean = report.aggregate.mean.find(name);
        if (mean == report.aggregate.mean.end()) {
            out << "-\n";
            continue;
        }
        out << format_metric(mean->second) << " +/- "
            << format_metric(report.aggregate.stdev.at(name)) << "\n";
    }
    return out.str();
}

std::string render_comparison(std::span<const RunReport> reports) {
    if (reports.empty()) throw ValidationError("comparison needs at least one report");
    const RunMode mode = reports.front().mode;
    const TimeRange window = reports.front().test_window;
    for (const auto& r : reports) {
        if (r.mode != mode)
            throw ConfigError(std::string("cannot compare reports with mixed modes '") +
                              to_string(mode) + "' and '" + to_string(r.mode) + "'");
        if (r.test_window.start != window.start || r.test_window.end != window.end)
            throw ConfigError(
                "cannot compare reports over different test windows [" +
                std::to_string(window.start) + ", " + std::to_string(window.end) + ") and [" +
                std::to_string(r.test_window.start) + ", " +
                std::to_string(r.test_window.end) + ")");
    }

    const auto names = metric_names(mode == RunMode::oe ? MetricReport::Flavor::oe
                                                        : MetricReport::Flavor::st);
    std::vector<std::vector<std::string>> cells;
    std::vector<std::string> header{"strategy"};
    header.insert(header.end(), names.begin(), names.end());
    cells.push_back(header);
    for (const auto& r : reports) {
        std::vector<std::string> row{r.label};
        for (const auto& name : names) {
            const auto mean = r.aggregate.mean.find(name);
            if (mean == r.aggregate.mean.end()) {
                row.push_back("-");
            } else {
                row.push_back(format_metric(mean->second) + " +/- " +
                              format_metric(r.aggregate.stdev.at(name)));
            }
        }
        cells.push_back(std::move(row));
    }

    std::vector<std::size_t> widths(cells.front().size(), 0);
    for (const auto& row : cells)
        for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());
    std::ostringstream out;
    for (std::size_t rix = 0; rix < cells.size(); ++rix) {
        const auto& row = cells[rix];
        for (std::size_t c = 0; c < row.size(); ++c) {
            out << std::left << std::setw(static_cast<int>(widths[c]) + 2) << row[c];
        }
        out << "\n";
        if (rix == 0) {
            for (std::size_t c = 0; c < row.size(); ++c)
                out << std::string(widths[c], '-') << "  ";
            out << "\n";
        }
    }
    return out.str();
}

}  // namespace trendtune
