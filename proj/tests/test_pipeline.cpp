// Config parsing, report round trips and the end-to-end command
// pipeline over synthetic data, including the installed CLI binary.
#include <doctest.h>

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "test_util.hpp"
#include "trendtune/commands.hpp"
#include "trendtune/config.hpp"
#include "trendtune/errors.hpp"
#include "trendtune/metrics.hpp"
#include "trendtune/report.hpp"
#include "trendtune/rng.hpp"
#include "trendtune/sketch.hpp"
#include "trendtune/version.hpp"

using namespace trendtune;
using tt_test::random_walk;
using tt_test::read_file;
using tt_test::series_csv;
using tt_test::temp_dir;
using tt_test::write_file;

namespace {

constexpr std::int64_t kDay = 86400;
constexpr std::int64_t kStart = 1577836800;  // 2020-01-01 UTC midnight

// Two-asset daily fixture plus a trading config; span_days of bars.
std::filesystem::path write_st_fixture(const std::string& name, int span_days, int budget,
                                       const std::string& extra = "") {
    const auto dir = temp_dir(name);
    write_file(dir / "asset_a.csv",
               series_csv(random_walk(static_cast<std::size_t>(span_days), 21, 100.0, 0.8), kDay,
                          kStart));
    write_file(dir / "asset_b.csv",
               series_csv(random_walk(static_cast<std::size_t>(span_days), 22, 80.0, 0.6), kDay,
                          kStart));
    std::ostringstream cfg;
    cfg << "[run]\n"
        << "mode = st\n"
        << "budget = " << budget << "\n"
        << "seed = 7\n"
        << "seeds = 11, 12\n"
        << "output_dir = " << (dir / "out").string() << "\n"
        << "[data]\n"
        << "path = asset_a.csv, asset_b.csv\n"
        << "interval = 1d\n"
        << "[env]\n"
        << "max_units = 2\n"
        << "[policy]\n"
        << "source = bias\n"
        << "bias_logits = 0.3, 0.1, 0.0, -0.1, -0.3\n"
        << extra;
    write_file(dir / "run.ini", cfg.str());
    return dir;
}

// One-asset hourly fixture with day-grouped parent orders.
std::filesystem::path write_oe_fixture(const std::string& name, int span_days, int budget) {
    const auto dir = temp_dir(name);
    write_file(dir / "book.csv",
               series_csv(random_walk(static_cast<std::size_t>(span_days) * 24, 31, 50.0, 0.05),
                          3600, kStart));
    std::string logits;
    for (int i = 0; i < 25; ++i) logits += (i ? ", " : "") + std::to_string((i % 5) * 0.1);
    std::ostringstream cfg;
    cfg << "[run]\n"
        << "mode = oe\n"
        << "budget = " << budget << "\n"
        << "seed = 3\n"
        << "seeds = 5\n"
        << "output_dir = " << (dir / "out").string() << "\n"
        << "[data]\n"
        << "path = book.csv\n"
        << "interval = 1h\n"
        << "[split]\n"
        << "train = 10d\n"
        << "validation = 6d\n"
        << "test = 6d\n"
        << "step = 30d\n"
        << "[policy]\n"
        << "source = bias\n"
        << "bias_logits = " << logits << "\n";
    write_file(dir / "run.ini", cfg.str());
    return dir;
}

int run_cli(const std::string& args, std::string* output = nullptr) {
    const std::string cmd = std::string(TRENDTUNE_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = ::popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string captured;
    std::array<char, 512> buf{};
    while (std::fgets(buf.data(), static_cast<int>(buf.size()), pipe) != nullptr)
        captured += buf.data();
    const int status = ::pclose(pipe);
    if (output) *output = captured;
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("parse_ini handles sections, comments and inline values") {
    const std::string text =
        "# leading comment\n"
        "[run]\n"
        "mode = st   # trailing comment\n"
        "\n"
        "[data]\n"
        "path = a.csv, b.csv\n"
        "formula = y = x + 1\n";
    const auto entries = parse_ini(text);
    REQUIRE(entries.size() == 3);
    CHECK(entries[0].section == "run");
    CHECK(entries[0].key == "mode");
    CHECK(entries[0].value == "st");
    CHECK(entries[0].line == 3);
    CHECK(entries[1].section == "data");
    CHECK(entries[1].value == "a.csv, b.csv");
    CHECK(entries[2].value == "y = x + 1");  // only the first '=' splits
}

TEST_CASE("parse_ini rejects malformed lines and duplicate keys") {
    CHECK_THROWS_WITH_AS(parse_ini("[run]\nmode st\n"),
                         "config error: expected 'key = value' (line 2)", ParseError);
    CHECK_THROWS_WITH_AS(parse_ini("[run\nmode = st\n"),
                         "config error: unterminated section header (line 1)", ParseError);
    CHECK_THROWS_WITH_AS(parse_ini("[run]\n= st\n"), "config error: empty key (line 2)",
                         ParseError);
    CHECK_THROWS_WITH_AS(parse_ini("[run]\nmode = st\nmode = oe\n"),
                         "config error: duplicate key 'run.mode' (line 3)", ParseError);
    // Same key in different sections is legal.
    CHECK(parse_ini("[a]\nx = 1\n[b]\nx = 2\n").size() == 2);
}

TEST_CASE("parse_duration covers all units; parse_date covers both forms") {
    CHECK(parse_duration("90") == 90);
    CHECK(parse_duration("90s") == 90);
    CHECK(parse_duration("45min") == 2700);
    CHECK(parse_duration("3h") == 10800);
    CHECK(parse_duration("90d") == 7776000);
    CHECK(parse_duration("2w") == 1209600);
    CHECK(parse_duration("6m") == 15552000);  // fixed 30-day months
    CHECK(parse_duration("6mo") == 15552000);
    CHECK(parse_duration("1y") == 31536000);  // fixed 365-day years
    CHECK_THROWS_AS(parse_duration("6 fortnights"), ValidationError);
    CHECK_THROWS_AS(parse_duration(""), ValidationError);
    CHECK_THROWS_AS(parse_duration("d"), ValidationError);

    CHECK(parse_date("1970-01-01") == 0);
    CHECK(parse_date("2020-01-01") == kStart);
    CHECK(parse_date("2020-01-02") == 1577923200);
    CHECK(parse_date("86400") == 86400);
}

TEST_CASE("parse_run_config applies defaults and the stock preset") {
    const RunConfig cfg = parse_run_config("[run]\nmode = st\n[data]\npath = x.csv\n");
    CHECK(cfg.mode == RunMode::st);
    CHECK(cfg.market == MarketPreset::stock);
    CHECK(cfg.budget == 20);
    CHECK(cfg.seeds == std::vector<std::uint64_t>{1, 2, 3, 4, 5});
    CHECK(cfg.env.caps.unit == ActionCaps::Unit::shares);
    CHECK(cfg.env.caps.max_units == 100);
    CHECK(cfg.env.margin_rate == doctest::Approx(0.0775));
    CHECK(cfg.env.periods_per_year == doctest::Approx(252.0));
    CHECK(cfg.env.capital == doctest::Approx(1000000.0));
    CHECK(cfg.env.fee_rate == doctest::Approx(0.001));
    CHECK(cfg.sketch.window == 14);
    CHECK(cfg.output_dir == "out");
}

TEST_CASE("crypto preset switches caps, margin rate and periods; keys still override") {
    const RunConfig cfg = parse_run_config(
        "[run]\nmode = st\nmarket = crypto\n[data]\npath = x.csv\n"
        "[env]\nperiods_per_year = 500\n");
    CHECK(cfg.market == MarketPreset::crypto);
    CHECK(cfg.env.caps.unit == ActionCaps::Unit::notional);
    CHECK(cfg.env.caps.notional_cap == doctest::Approx(100000.0));
    CHECK(cfg.env.margin_rate == doctest::Approx(0.1712));
    // Explicit keys win over the preset even though the preset default is 1095.
    CHECK(cfg.env.periods_per_year == doctest::Approx(500.0));

    const RunConfig plain = parse_run_config(
        "[run]\nmode = st\nmarket = crypto\n[data]\npath = x.csv\n");
    CHECK(plain.env.periods_per_year == doctest::Approx(1095.0));
}

TEST_CASE("parse_run_config reads lists, calendars and policy settings") {
    const RunConfig cfg = parse_run_config(
        "[run]\nmode = oe\nseeds = 7, 8, 9\nseed = 42\n"
        "[data]\npath = a.csv, b.csv\nindex_path = idx.csv\ninterval = 1d\n"
        "calendar = weekdays\nholidays = 2020-01-01, 2020-12-25\n"
        "[split]\nstart = 2020-01-01\ntrain = 6m\n"
        "[policy]\nsource = bias\nensemble = 2\nbias_logits = 0, 1; 2, 3\n"
        "[env]\ngamma = 0.9\noe_side = buy\noe_order_steps = 8\n");
    CHECK(cfg.mode == RunMode::oe);
    CHECK(cfg.seeds == std::vector<std::uint64_t>{7, 8, 9});
    CHECK(cfg.seed == 42);
    REQUIRE(cfg.data.paths.size() == 2);
    CHECK(cfg.data.paths[1] == "b.csv");
    CHECK(cfg.data.index_path == "idx.csv");
    CHECK(cfg.data.interval == kDay);
    REQUIRE(cfg.data.calendar.has_value());
    CHECK(cfg.data.calendar->kind == Calendar::Kind::weekdays);
    CHECK(cfg.data.calendar->holidays == std::vector<std::int64_t>{18262, 18621});
    CHECK(cfg.split.start == kStart);
    CHECK(cfg.split.train == 6 * 30 * kDay);
    CHECK(cfg.policy.source == PolicySource::bias);
    CHECK(cfg.policy.bias_logits ==
          std::vector<std::vector<double>>{{0.0, 1.0}, {2.0, 3.0}});
    CHECK(cfg.env.gamma == doctest::Approx(0.9));
    CHECK(cfg.env.oe_side == OrderSide::buy);
    CHECK(cfg.env.oe_order_steps == 8);
}

TEST_CASE("parse_run_config rejects missing mode, unknown keys and bad values") {
    CHECK_THROWS_WITH_AS(parse_run_config("[data]\npath = x.csv\n"),
                         "config error: required key 'run.mode' is missing", ConfigError);
    CHECK_THROWS_WITH_AS(parse_run_config("[run]\nmode = st\nbogus = 1\n"),
                         "config error: unknown key for 'run.bogus' at line 3", ConfigError);
    CHECK_THROWS_WITH_AS(parse_run_config("[run]\nmode = st\n[junk]\nx = 1\n"),
                         "config error: unknown section for 'junk.x' at line 4", ConfigError);
    CHECK_THROWS_AS(parse_run_config("[run]\nmode = maybe\n"), ConfigError);
    CHECK_THROWS_AS(parse_run_config("[run]\nmode = st\nbudget = soon\n"), ConfigError);
}

TEST_CASE("validate_run_config enforces structural invariants") {
    RunConfig ok = parse_run_config("[run]\nmode = st\n[data]\npath = x.csv\n");
    CHECK_NOTHROW(validate_run_config(ok));

    RunConfig bad = ok;
    bad.budget = 0;
    CHECK_THROWS_AS(validate_run_config(bad), ConfigError);
    bad = ok;
    bad.seeds.clear();
    CHECK_THROWS_AS(validate_run_config(bad), ConfigError);
    bad = ok;
    bad.data.paths.clear();
    CHECK_THROWS_AS(validate_run_config(bad), ConfigError);
    bad = ok;
    bad.env.gamma = 0.0;  // optimizer objective needs a usable discount
    CHECK_THROWS_AS(validate_run_config(bad), ConfigError);
    bad = ok;
    bad.env.gamma = 1.5;
    CHECK_THROWS_AS(validate_run_config(bad), ConfigError);
    bad = ok;
    bad.sketch.window = 1;
    CHECK_THROWS_AS(validate_run_config(bad), ConfigError);
    bad = ok;
    bad.sketch.temp_lo = -0.5;
    CHECK_THROWS_AS(validate_run_config(bad), ConfigError);
    bad = ok;
    bad.sketch.threshold_lo_pct = 0.9;
    bad.sketch.threshold_hi_pct = 0.1;
    CHECK_THROWS_AS(validate_run_config(bad), ConfigError);
}

TEST_CASE("load_run_config resolves paths against the config directory") {
    const auto dir = temp_dir("cfg_paths");
    std::filesystem::create_directories(dir / "data");
    write_file(dir / "data" / "a.csv", series_csv(random_walk(5, 1), kDay, kStart));
    write_file(dir / "run.ini",
               "[run]\nmode = st\n[data]\npath = data/a.csv\ninterval = 1d\n");
    const RunConfig cfg = load_run_config((dir / "run.ini").string());
    REQUIRE(cfg.data.paths.size() == 1);
    CHECK(cfg.data.paths[0] == (dir / "data" / "a.csv").string());

    write_file(dir / "missing.ini", "[run]\nmode = st\n[data]\npath = nope.csv\n");
    CHECK_THROWS_AS(load_run_config((dir / "missing.ini").string()), ConfigError);
    CHECK_THROWS_AS(load_run_config((dir / "absent.ini").string()), ConfigError);
}

TEST_CASE("build_orders groups by day, caps history and skips cold starts") {
    // 3 days of hourly bars; closes encode the bar index.
    AssetSeries series = tt_test::make_series("book", 72, 3600, kStart,
                                              [](std::size_t i) { return 10.0 + i; });
    const TimeRange window{kStart, kStart + 3 * kDay};

    SUBCASE("daily grouping with no feature window keeps every day") {
        const auto orders = build_orders(series, window, 0, OrderSide::sell, 0);
        REQUIRE(orders.size() == 3);
        CHECK(orders[0].order_id == "book@" + std::to_string(kStart));
        CHECK(orders[0].horizon() == 24);
        CHECK(orders[0].history.empty());
        CHECK(orders[1].price_path.front() == doctest::Approx(10.0 + 24));
    }
    SUBCASE("feature window drops the first day and caps history at twice the window") {
        const auto orders = build_orders(series, window, 0, OrderSide::buy, 14);
        REQUIRE(orders.size() == 2);  // day 0 has no warm-up history
        CHECK(orders[0].side == OrderSide::buy);
        CHECK(orders[0].history.size() == 24);       // all available, under the 28 cap
        CHECK(orders[1].history.size() == 28);       // capped at 2 * 14
        CHECK(orders[1].history.back() == doctest::Approx(10.0 + 47));
    }
    SUBCASE("fixed step chunks drop the trailing partial group") {
        const auto orders = build_orders(series, window, 10, OrderSide::sell, 0);
        REQUIRE(orders.size() == 7);  // 72 / 10
        for (const auto& task : orders) CHECK(task.horizon() == 10);
    }
    SUBCASE("negative step is rejected") {
        CHECK_THROWS_AS(build_orders(series, window, -1, OrderSide::sell, 0), DomainError);
    }
}

TEST_CASE("fit is deterministic and budget one pins the identity probe") {
    const auto dir = write_st_fixture("pipe_fit", 380, 2);
    const std::string config = (dir / "run.ini").string();

    const FitOutputs first = cmd_fit(config);
    REQUIRE(first.param_files.size() == 1);  // defaults give exactly one rolling split
    REQUIRE(first.history_files.size() == 1);
    CHECK(std::filesystem::exists(first.param_files[0]));
    CHECK(std::filesystem::exists(first.history_files[0]));
    CHECK(first.results[0].history.size() == 2);
    const std::string params_bytes = read_file(first.param_files[0]);
    const std::string history_bytes = read_file(first.history_files[0]);

    const FitOutputs second = cmd_fit(config);
    CHECK(read_file(second.param_files[0]) == params_bytes);
    CHECK(read_file(second.history_files[0]) == history_bytes);

    // The first trial is always identity tuning, so with budget 1 the
    // fitted temperatures must all be exactly 1.
    const auto dir1 = write_st_fixture("pipe_fit_b1", 380, 1);
    const FitOutputs one = cmd_fit((dir1 / "run.ini").string());
    const SketchTemplate tmpl = default_template(SketchMode::single_model());
    const SketchParams best = read_params(tmpl, one.param_files[0]);
    REQUIRE(best.directives.size() == 5);
    for (const auto& payload : best.directives) {
        REQUIRE(payload.size() == 1);
        CHECK(payload[0] == 1.0);
    }
    CHECK_NOTHROW(validate_params(tmpl, best));
    CHECK(one.results[0].history.size() == 1);
    CHECK(one.results[0].best_objective == one.results[0].history[0].objective);
}

TEST_CASE("fit fails loudly when every trial dies on warm-up") {
    // 30-day training window puts the validation window inside the
    // 60-bar indicator warm-up, so every objective evaluation fails.
    const auto dir = write_st_fixture("pipe_fit_fail", 90, 2,
                                      "[split]\ntrain = 30d\nvalidation = 20d\n"
                                      "test = 20d\nstep = 20d\n");
    CHECK_THROWS_WITH_AS(
        cmd_fit((dir / "run.ini").string()),
        "every optimizer trial failed on split 0; check window lengths and indicator warm-up",
        EvalError);
}

TEST_CASE("trading backtest is reproducible and replicates the raw runner") {
    const auto dir = write_st_fixture("pipe_bt", 380, 2);
    const std::string config = (dir / "run.ini").string();
    const FitOutputs fit = cmd_fit(config);

    const RunReport report = cmd_backtest(config, fit.param_files, "alpha");
    CHECK(report.label == "alpha");
    CHECK(report.mode == RunMode::st);
    CHECK(report.version == kVersion);
    REQUIRE(report.seeds.size() == 2);
    CHECK(report.seeds[0].seed == 11);
    CHECK(report.seeds[1].seed == 12);
    CHECK(std::filesystem::exists(dir / "out" / "report_alpha.json"));

    // Window geometry: defaults are 180/90/90 over 380 daily bars.
    const PreparedRun run = prepare_run(config);
    REQUIRE(run.splits.size() == 1);
    CHECK(report.test_window.start == run.splits[0].test.start);
    CHECK(report.test_window.end == run.splits[0].test.end);
    const std::size_t test_bars = 90;
    CHECK(report.trend_timeline.size() == test_bars);
    for (const auto& seed : report.seeds) {
        CHECK(seed.curve.values.size() == test_bars + 1);  // anchored one bar before
        CHECK(seed.curve.values.front() == run.config.env.capital);
    }

    // Bit-identical rerun.
    const RunReport again = cmd_backtest(config, fit.param_files, "alpha");
    for (std::size_t s = 0; s < report.seeds.size(); ++s) {
        CHECK(again.seeds[s].curve.values == report.seeds[s].curve.values);
        CHECK(again.seeds[s].metrics.st.cr == report.seeds[s].metrics.st.cr);
        CHECK(again.seeds[s].metrics.st.ar == report.seeds[s].metrics.st.ar);
    }

    // Replicate seed 11 with the raw backtest runner and the published
    // seed derivation: same policies, parameters and stream.
    const SketchParams params = read_params(run.tmpl, fit.param_files[0]);
    const auto policies = build_policies(run, run.splits[0], 0, 5);
    const TunedPolicy tuned = make_tuned_policy(policies, run.tmpl, params);
    StRunConfig cfg;
    cfg.initial_capital = run.config.env.capital;
    cfg.costs.fee_rate = run.config.env.fee_rate;
    cfg.caps = run.config.env.caps;
    cfg.margin = run.config.env.margin;
    cfg.margin_terms.annual_rate = run.config.env.margin_rate;
    cfg.periods_per_year = run.config.env.periods_per_year;
    cfg.indicator_window = run.config.sketch.window;
    cfg.normalize_indicators = run.config.sketch.normalize;
    const StDecisionFn decide = [&](const PolicyState& state, const MarketFeatures& f) {
        return tuned.decide(state, f).dist;
    };
    Rng rng(derive_seed(11, "test_run", 0));
    const StRunResult raw = run_st_backtest(*run.market, run.splits[0].test, cfg, decide, rng);
    CHECK(raw.curve.timestamps == report.seeds[0].curve.timestamps);
    CHECK(raw.curve.values == report.seeds[0].curve.values);
}

TEST_CASE("backtest rejects a parameter-file count mismatch") {
    const auto dir = write_st_fixture("pipe_bt_count", 380, 1);
    const std::string config = (dir / "run.ini").string();
    const FitOutputs fit = cmd_fit(config);
    std::vector<std::string> twice = fit.param_files;
    twice.push_back(fit.param_files[0]);
    CHECK_THROWS_WITH_AS(cmd_backtest(config, twice, "x"),
                         "expected 1 parameter files (one per split), got 2", ConfigError);
    CHECK_THROWS_AS(cmd_backtest(config, {}, "x"), ConfigError);
}

TEST_CASE("reports round-trip byte-exactly and aggregate matches the seeds") {
    const auto dir = write_st_fixture("pipe_report", 380, 2);
    const std::string config = (dir / "run.ini").string();
    const FitOutputs fit = cmd_fit(config);
    const RunReport report = cmd_backtest(config, fit.param_files, "alpha");
    const std::string path = (dir / "out" / "report_alpha.json").string();

    const std::string bytes = read_file(path);
    const RunReport loaded = report_from_json(bytes);
    CHECK(report_to_json(loaded) == bytes);
    CHECK(loaded.label == "alpha");
    CHECK(loaded.mode == RunMode::st);
    CHECK(loaded.seeds.size() == report.seeds.size());
    CHECK(loaded.seeds[0].curve.values == report.seeds[0].curve.values);
    CHECK(loaded.trend_timeline == report.trend_timeline);
    CHECK(loaded.params.thresholds == report.params.thresholds);
    CHECK(loaded.config_echo == report.config_echo);
    CHECK(loaded.trials.size() == 2);  // trial history travels with the report

    const MetricAggregate agg = compute_aggregate(report.seeds);
    CHECK(agg.mean == report.aggregate.mean);
    CHECK(agg.stdev == report.aggregate.stdev);
    CHECK(agg.mean.count("cr") == 1);
    CHECK(agg.mean.at("cr") ==
          (report.seeds[0].metrics.st.cr + report.seeds[1].metrics.st.cr) / 2.0);

    // metric_value mirrors the aggregate's source values.
    const auto cr = metric_value(report.seeds[0].metrics, "cr");
    REQUIRE(cr.has_value());
    CHECK(*cr == report.seeds[0].metrics.st.cr);
    CHECK_FALSE(metric_value(report.seeds[0].metrics, "pa").has_value());  // wrong flavor

    const std::string text = render_text(report);
    CHECK(text.find("alpha") != std::string::npos);
    CHECK(text.find("cr") != std::string::npos);
}

TEST_CASE("report comparison renders a table and rejects mismatched runs") {
    const auto dir = write_st_fixture("pipe_compare", 380, 1);
    const std::string config = (dir / "run.ini").string();
    const FitOutputs fit = cmd_fit(config);
    cmd_backtest(config, fit.param_files, "alpha");
    cmd_backtest(config, fit.param_files, "beta");
    const std::string alpha_path = (dir / "out" / "report_alpha.json").string();
    const std::string beta_path = (dir / "out" / "report_beta.json").string();

    const auto exports = (dir / "curves").string();
    const std::string table = cmd_report({alpha_path, beta_path}, exports);
    CHECK(table.find("alpha") != std::string::npos);
    CHECK(table.find("beta") != std::string::npos);
    CHECK(table.find("sr") != std::string::npos);
    CHECK(std::filesystem::exists(dir / "curves" / "alpha_seed11.csv"));
    CHECK(std::filesystem::exists(dir / "curves" / "beta_seed12.csv"));

    // Exported curves reproduce the report's metrics bit-exactly.
    const RunReport alpha = load_report(alpha_path);
    const EquityCurve curve = read_equity_curve((dir / "curves" / "alpha_seed11.csv").string(),
                                                alpha.seeds[0].curve.periods_per_year);
    const STMetrics metrics = st_metrics(curve);
    CHECK(metrics.cr == alpha.seeds[0].metrics.st.cr);
    CHECK(metrics.ar == alpha.seeds[0].metrics.st.ar);
    CHECK(metrics.av == alpha.seeds[0].metrics.st.av);
    CHECK(metrics.md == alpha.seeds[0].metrics.st.md);

    CHECK_THROWS_WITH_AS(cmd_report({}), "comparison needs at least one report",
                         ValidationError);

    RunReport other = load_report(beta_path);
    other.mode = RunMode::oe;
    std::vector<RunReport> mixed{alpha, other};
    CHECK_THROWS_WITH_AS(render_comparison(mixed),
                         "cannot compare reports with mixed modes 'st' and 'oe'", ConfigError);

    RunReport shifted = load_report(beta_path);
    shifted.test_window.start += kDay;
    std::vector<RunReport> windows{alpha, shifted};
    CHECK_THROWS_AS(render_comparison(windows), ConfigError);
}

TEST_CASE("order-execution pipeline fits and backtests deterministically") {
    const auto dir = write_oe_fixture("pipe_oe", 30, 2);
    const std::string config = (dir / "run.ini").string();

    const FitOutputs fit = cmd_fit(config);
    REQUIRE(fit.param_files.size() == 1);

    const RunReport report = cmd_backtest(config, fit.param_files, "oe_run");
    CHECK(report.mode == RunMode::oe);
    REQUIRE(report.seeds.size() == 1);
    CHECK(report.seeds[0].curve.values.empty());  // no equity curve for order runs
    CHECK(report.trend_timeline.empty());
    const OEMetrics& oe = report.seeds[0].metrics.oe;
    CHECK(std::isfinite(oe.pa));
    CHECK(std::isfinite(oe.arr));
    CHECK(oe.pos >= 0.0);
    CHECK(oe.pos <= 1.0);
    CHECK(report.aggregate.mean.count("pa") == 1);

    const RunReport again = cmd_backtest(config, fit.param_files, "oe_run");
    CHECK(again.seeds[0].metrics.oe.pa == oe.pa);
    CHECK(again.seeds[0].metrics.oe.arr == oe.arr);
    CHECK(again.seeds[0].metrics.oe.glr == oe.glr);
    CHECK(again.seeds[0].metrics.oe.pos == oe.pos);

    // Day-grouped hourly orders share a 24-step horizon; the test window
    // spans six days, none near the series head, so six orders run.
    const PreparedRun run = prepare_run(config);
    const auto orders = build_orders(run.assets[0], run.splits[0].test,
                                     run.config.env.oe_order_steps, run.config.env.oe_side,
                                     run.config.sketch.window);
    CHECK(orders.size() == 6);
    for (const auto& task : orders) CHECK(task.horizon() == 24);
}

TEST_CASE("ingest summarizes series and re-exports round-trip") {
    const auto dir = write_st_fixture("pipe_ingest", 40, 1);
    const auto summaries = cmd_ingest((dir / "run.ini").string(), (dir / "exported").string());
    REQUIRE(summaries.size() == 2);
    CHECK(summaries[0].asset_id == "asset_a");
    CHECK(summaries[1].asset_id == "asset_b");
    CHECK(summaries[0].bars == 40);
    CHECK(summaries[0].interval == kDay);
    CHECK(summaries[0].range.start == kStart);
    CHECK(summaries[0].range.end == kStart + 40 * kDay);
    CHECK(summaries[0].min_close > 0.0);
    CHECK(summaries[0].min_close <= summaries[0].max_close);

    AssetSeries original = load_series((dir / "asset_a.csv").string(), ColumnSchema{}, "", kDay);
    AssetSeries exported =
        load_series((dir / "exported" / "asset_a.csv").string(), ColumnSchema{}, "", kDay);
    REQUIRE(exported.bars.size() == original.bars.size());
    for (std::size_t i = 0; i < original.bars.size(); ++i) {
        CHECK(exported.bars[i].timestamp == original.bars[i].timestamp);
        CHECK(exported.bars[i].close == original.bars[i].close);
    }
}

TEST_CASE("sketch check summarizes hole counts for both modes") {
    const auto dir = temp_dir("pipe_sketch");
    const std::string rules = render_sketch(default_template(SketchMode::single_model()));
    write_file(dir / "rules.txt", rules);

    const std::string single = cmd_sketch_check((dir / "rules.txt").string(), 1);
    CHECK(single.find("ok: 5 conditionals, 8 threshold holes, 5 directive holes, "
                      "13 scalar parameters") == 0);
    const std::string ensemble = cmd_sketch_check((dir / "rules.txt").string(), 3);
    CHECK(ensemble.find("23 scalar parameters") != std::string::npos);

    write_file(dir / "bad.txt", "if vol < ?? and dr > ?? -> steady_descend\n");
    CHECK_THROWS_AS(cmd_sketch_check((dir / "bad.txt").string(), 1), ParseError);
}

TEST_CASE("command-line binary maps error classes to exit codes") {
    const auto dir = temp_dir("pipe_cli");
    write_file(dir / "rules.txt", render_sketch(default_template(SketchMode::single_model())));

    std::string out;
    CHECK(run_cli("--version", &out) == 0);
    CHECK(out.find(kVersion) != std::string::npos);

    CHECK(run_cli("sketch check " + (dir / "rules.txt").string(), &out) == 0);
    CHECK(out.find("ok: 5 conditionals") != std::string::npos);

    // Config and validation problems exit 1.
    write_file(dir / "bad_rules.txt", "if vol < ?? -> nonsense\n");
    CHECK(run_cli("sketch check " + (dir / "bad_rules.txt").string(), &out) == 1);
    CHECK(out.find("error:") != std::string::npos);
    CHECK(run_cli("fit --config " + (dir / "nope.ini").string(), &out) == 1);
    CHECK(run_cli("bogus-subcommand", nullptr) == 1);

    // Runtime evaluation failures exit 2.
    const auto fail_dir = write_st_fixture("pipe_cli_fail", 90, 2,
                                           "[split]\ntrain = 30d\nvalidation = 20d\n"
                                           "test = 20d\nstep = 20d\n");
    CHECK(run_cli("fit --config " + (fail_dir / "run.ini").string(), &out) == 2);
    CHECK(out.find("every optimizer trial failed") != std::string::npos);

    // A full fit + backtest + report pass through the binary.
    const auto run_dir = write_st_fixture("pipe_cli_run", 380, 1);
    const std::string config = (run_dir / "run.ini").string();
    CHECK(run_cli("fit --config " + config, &out) == 0);
    CHECK(out.find("split 0: best objective") != std::string::npos);
    const std::string params = (run_dir / "out" / "params_split0.json").string();
    REQUIRE(std::filesystem::exists(params));
    CHECK(run_cli("backtest --config " + config + " --params " + params + " --label cli", &out) ==
          0);
    CHECK(out.find("cli") != std::string::npos);
    const std::string report = (run_dir / "out" / "report_cli.json").string();
    REQUIRE(std::filesystem::exists(report));
    CHECK(run_cli("report " + report, &out) == 0);
    CHECK(out.find("cli") != std::string::npos);
    CHECK(run_cli("ingest --config " + config, &out) == 0);
    CHECK(out.find("asset_a: 380 bars") != std::string::npos);
}
