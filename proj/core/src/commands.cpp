#include "trendtune/commands.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <sstream>
#include <utility>

#include "trendtune/errors.hpp"
#include "trendtune/rng.hpp"

namespace trendtune {

namespace {

std::string read_text_file(const std::string& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw ConfigError(std::string("cannot open ") + what + " '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

StRunConfig make_st_run_config(const EnvConfig& env) {
    StRunConfig cfg;
    cfg.initial_capital = env.capital;
    cfg.costs.fee_rate = env.fee_rate;
    cfg.caps = env.caps;
    cfg.margin = env.margin;
    cfg.margin_terms.annual_rate = env.margin_rate;
    cfg.periods_per_year = env.periods_per_year;
    return cfg;
}

int st_action_count(const EnvConfig& env) { return 2 * env.caps.max_units + 1; }

// Cycles the training orders as execution episodes for the toy trainer.
// Infeasible actions are clipped to the remaining inventory and the
// final step executes the residual, mirroring evaluation episodes.
class OrderToyEnv final : public EpisodicEnv {
public:
    OrderToyEnv(std::vector<OrderTask> orders, double alpha)
        : orders_(std::move(orders)), alpha_(alpha) {
        if (orders_.empty()) throw EvalError("toy policy training needs at least one order");
        horizon_ = orders_.front().horizon();
        for (const auto& task : orders_) {
            if (task.horizon() != horizon_)
                throw ValidationError("orders must share one horizon for policy training");
            means_.push_back(mean_price(task));
        }
    }

    int action_count() const override { return horizon_ + 1; }
    int feature_count() const override { return 4; }

    PolicyState reset(Rng&) override {
        current_ = episode_ % orders_.size();
        ++episode_;
        step_no_ = 1;
        remaining_units_ = horizon_;
        return oe_state(orders_[current_], 1, 1.0);
    }

    Step step(int action, Rng&) override {
        const OrderTask& task = orders_[current_];
        int units = std::clamp(action, 0, remaining_units_);
        if (step_no_ == horizon_) units = remaining_units_;
        const double unit = 1.0 / static_cast<double>(horizon_);
        const double remaining = static_cast<double>(remaining_units_) * unit;
        const OEStepOutcome out = oe_step(task, step_no_, static_cast<double>(units) * unit,
                                          remaining, alpha_, means_[current_]);
        remaining_units_ -= units;
        const bool done = step_no_ == horizon_;
        ++step_no_;
        PolicyState next;
        if (!done)
            next = oe_state(task, step_no_, static_cast<double>(remaining_units_) * unit);
        return {std::move(next), out.reward, done};
    }

private:
    std::vector<OrderTask> orders_;
    std::vector<double> means_;
    double alpha_ = 0.0;
    int horizon_ = 0;
    std::size_t episode_ = 0;
    std::size_t current_ = 0;
    int step_no_ = 1;
    int remaining_units_ = 0;
};

// Short single-asset trading episodes over the training window. Reward
// is the account-value change against the next bar's price, so holding
// into rises pays and holding into falls costs.
class StToyEnv final : public EpisodicEnv {
public:
    StToyEnv(std::shared_ptr<const StMarket> market, const TimeRange& window,
             const StRunConfig& cfg)
        : market_(std::move(market)), cfg_(cfg) {
        const std::size_t warmup =
            std::max(static_cast<std::size_t>(kStateFeatureWarmup),
                     static_cast<std::size_t>(cfg_.indicator_window));
        begin_ = std::max(market_->step_at(window.start), warmup);
        end_ = market_->step_at(window.end);
        // The reward at t looks at prices at t+1, which must stay inside
        // the training window.
        if (begin_ + 1 >= end_)
            throw EvalError("training window too short for toy policy training");
    }

    int action_count() const override { return st_action_count_; }
    int feature_count() const override { return 12; }

    void set_action_count(int n) { st_action_count_ = n; }

    PolicyState reset(Rng& rng) override {
        asset_ = static_cast<int>(episode_ % static_cast<std::size_t>(market_->asset_count()));
        ++episode_;
        const std::size_t usable = end_ - 1 - begin_;  // last start with one step left
        t_ = begin_ + rng.uniform_int(usable);
        steps_left_ = std::min<std::size_t>(32, end_ - 1 - t_);
        portfolio_.balance = cfg_.initial_capital / market_->asset_count();
        portfolio_.holdings.assign(1, 0.0);
        portfolio_.borrowed = 0.0;
        portfolio_.accrued_interest = 0.0;
        return state_at(t_);
    }

    Step step(int action, Rng&) override {
        const double price_now = market_->asset(asset_).bars[t_].close;
        const double price_next = market_->asset(asset_).bars[t_ + 1].close;
        const std::vector<double> now{price_now};
        const std::vector<double> next{price_next};
        const int units = action - st_action_count_ / 2;
        const std::array<int, 1> act{units};
        st_step(portfolio_, now, act, cfg_.caps, cfg_.costs,
                market_->timestamp(t_));
        const double reward = portfolio_.value(next) - portfolio_.value(now);
        ++t_;
        --steps_left_;
        const bool done = steps_left_ == 0;
        return {done ? PolicyState{} : state_at(t_), reward, done};
    }

private:
    PolicyState state_at(std::size_t t) const {
        const AssetSeries& series = market_->asset(asset_);
        const StateFeatures features = market_->features(asset_).at(t);
        const std::vector<double> prices{series.bars[t].close};
        const std::array<StateFeatures, 1> block{features};
        PolicyState state;
        state.key = series.asset_id + "@" + std::to_string(series.bars[t].timestamp);
        state.features = build_state_vector(portfolio_, prices, block);
        return state;
    }

    std::shared_ptr<const StMarket> market_;
    StRunConfig cfg_;
    std::size_t begin_ = 0;
    std::size_t end_ = 0;
    std::size_t episode_ = 0;
    int asset_ = 0;
    std::size_t t_ = 0;
    std::size_t steps_left_ = 0;
    Portfolio portfolio_;
    int st_action_count_ = 0;
};

std::vector<OrderTask> build_window_orders(const PreparedRun& run, const TimeRange& window) {
    std::vector<OrderTask> orders;
    for (const auto& series : run.assets) {
        auto batch = build_orders(series, window, run.config.env.oe_order_steps,
                                  run.config.env.oe_side, run.config.sketch.window);
        orders.insert(orders.end(), std::make_move_iterator(batch.begin()),
                      std::make_move_iterator(batch.end()));
    }
    return orders;
}

int uniform_horizon(const std::vector<OrderTask>& orders, const char* what) {
    if (orders.empty()) throw EvalError(std::string(what) + " produced no usable orders");
    const int horizon = orders.front().horizon();
    for (const auto& task : orders)
        if (task.horizon() != horizon)
            throw ValidationError(std::string(what) + " orders must share one horizon; got " +
                                  std::to_string(horizon) + " and " +
                                  std::to_string(task.horizon()));
    return horizon;
}

// CSV produced by write_trial_history: header `trial,<dims...>,objective`.
std::pair<std::vector<std::string>, std::vector<Trial>> read_trial_history(
    const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open trial history file '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw ParseError("trial history '" + path + "' is empty");
    std::vector<std::string> columns;
    std::istringstream header(line);
    std::string cell;
    while (std::getline(header, cell, ',')) columns.push_back(cell);
    if (columns.size() < 2 || columns.front() != "trial" || columns.back() != "objective")
        throw ParseError("trial history '" + path + "' has an unexpected header");
    const std::vector<std::string> dims(columns.begin() + 1, columns.end() - 1);
    std::vector<Trial> trials;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream row(line);
        std::vector<std::string> cells;
        while (std::getline(row, cell, ',')) cells.push_back(cell);
        if (cells.size() != columns.size())
            throw ParseError("trial history row width mismatch", line_no);
        Trial t;
        t.index = static_cast<int>(std::strtol(cells[0].c_str(), nullptr, 10));
        for (std::size_t i = 1; i + 1 < cells.size(); ++i)
            t.point.push_back(std::strtod(cells[i].c_str(), nullptr));
        t.objective = std::strtod(cells.back().c_str(), nullptr);
        trials.push_back(std::move(t));
    }
    return {dims, trials};
}

std::string sibling_history_path(const std::string& param_path) {
    std::filesystem::path p(param_path);
    std::string stem = p.stem().string();
    const std::string prefix = "params_";
    if (stem.rfind(prefix, 0) != 0) return "";
    p.replace_filename("trials_" + stem.substr(prefix.size()) + ".csv");
    return p.string();
}

}  // namespace

PreparedRun prepare_run(const std::string& config_path) {
    RunConfig config = load_run_config(config_path);
    std::string config_text = read_text_file(config_path, "config file");

    std::vector<AssetSeries> assets;
    for (const auto& path : config.data.paths) {
        AssetSeries series = load_series(path, config.data.schema, "", config.data.interval);
        if (config.data.calendar) validate_calendar(series, *config.data.calendar);
        assets.push_back(std::move(series));
    }
    std::optional<AssetSeries> index;
    if (!config.data.index_path.empty()) {
        AssetSeries loaded = load_series(config.data.index_path, config.data.schema, "",
                                         config.data.interval);
        if (config.data.calendar) validate_calendar(loaded, *config.data.calendar);
        index = std::move(loaded);
    }

    const SketchMode mode = config.policy.ensemble > 1
                                ? SketchMode::ensemble(config.policy.ensemble)
                                : SketchMode::single_model();
    const std::string& tmpl_path = config.sketch.template_path;
    SketchTemplate tmpl =
        (tmpl_path.empty() || tmpl_path == "default")
            ? default_template(mode)
            : parse_sketch(read_text_file(tmpl_path, "sketch template"), mode);

    std::int64_t range_start = std::numeric_limits<std::int64_t>::max();
    std::int64_t range_end = std::numeric_limits<std::int64_t>::min();
    for (const auto& series : assets) {
        if (series.bars.empty()) throw ValidationError("series '" + series.asset_id + "' is empty");
        range_start = std::min(range_start, series.bars.front().timestamp);
        range_end = std::max(range_end, series.bars.back().timestamp + series.interval);
    }
    const TimeRange range{config.split.start.value_or(range_start),
                          config.split.end.value_or(range_end)};
    const auto& split = config.split;
    const std::int64_t day = 86400;
    std::vector<RollingSplit> splits =
        make_rolling_splits(range, split.train > 0 ? split.train : 180 * day,
                            split.validation > 0 ? split.validation : 90 * day,
                            split.test > 0 ? split.test : 90 * day,
                            split.step > 0 ? split.step : 90 * day);

    std::shared_ptr<const StMarket> market;
    if (config.mode == RunMode::st) market = std::make_shared<StMarket>(assets, index);
    return PreparedRun{std::move(config),  std::move(config_text), std::move(assets),
                       std::move(index),   std::move(tmpl),        std::move(splits),
                       std::move(market)};
}

std::vector<OrderTask> build_orders(const AssetSeries& series, const TimeRange& window, int steps,
                                    OrderSide side, int feature_window) {
    if (steps < 0) throw DomainError("order step count must be >= 0");
    const std::size_t first = lower_bound_index(series, window.start);
    std::vector<std::size_t> in_window;
    for (std::size_t i = first; i < series.bars.size(); ++i) {
        if (!window.contains(series.bars[i].timestamp)) break;
        in_window.push_back(i);
    }

    // Group in-window bar indices into order horizons.
    std::vector<std::pair<std::size_t, std::size_t>> groups;  // [begin, end) into in_window
    if (steps == 0) {
        std::size_t group_start = 0;
        for (std::size_t j = 1; j <= in_window.size(); ++j) {
            const bool boundary =
                j == in_window.size() ||
                series.bars[in_window[j]].timestamp / 86400 !=
                    series.bars[in_window[group_start]].timestamp / 86400;
            if (boundary) {
                groups.emplace_back(group_start, j);
                group_start = j;
            }
        }
    } else {
        for (std::size_t j = 0; j + static_cast<std::size_t>(steps) <= in_window.size();
             j += static_cast<std::size_t>(steps))
            groups.emplace_back(j, j + static_cast<std::size_t>(steps));
    }

    std::vector<OrderTask> orders;
    for (const auto& [gb, ge] : groups) {
        const std::size_t first_bar = in_window[gb];
        OrderTask task;
        task.asset_id = series.asset_id;
        task.order_id =
            series.asset_id + "@" + std::to_string(series.bars[first_bar].timestamp);
        task.side = side;
        task.target_quantity = 1.0;
        for (std::size_t j = gb; j < ge; ++j)
            task.price_path.push_back(series.bars[in_window[j]].close);
        if (feature_window > 0) {
            if (first_bar < static_cast<std::size_t>(feature_window)) continue;  // no warm-up
            const std::size_t hist = std::min<std::size_t>(
                first_bar, 2 * static_cast<std::size_t>(feature_window));
            for (std::size_t j = first_bar - hist; j < first_bar; ++j)
                task.history.push_back(series.bars[j].close);
        }
        orders.push_back(std::move(task));
    }
    return orders;
}

std::vector<std::shared_ptr<const FrozenPolicy>> build_policies(const PreparedRun& run,
                                                                const RollingSplit& split,
                                                                int split_index,
                                                                int expected_actions) {
    const PolicyConfig& pc = run.config.policy;
    const int count = pc.ensemble;
    std::vector<std::shared_ptr<const FrozenPolicy>> policies;
    policies.reserve(static_cast<std::size_t>(count));

    if (pc.source == PolicySource::external) {
        for (int j = 0; j < count; ++j) {
            auto policy = load_external_policy(pc.external_paths[static_cast<std::size_t>(j)]);
            if (policy->action_count() != expected_actions)
                throw ConfigError("policy '" + policy->id() + "' emits " +
                                  std::to_string(policy->action_count()) +
                                  " actions; this run needs " +
                                  std::to_string(expected_actions));
            policies.push_back(std::move(policy));
        }
        return policies;
    }

    if (pc.source == PolicySource::bias) {
        for (int j = 0; j < count; ++j) {
            const auto& logits = pc.bias_logits[static_cast<std::size_t>(j)];
            if (static_cast<int>(logits.size()) != expected_actions)
                throw ConfigError("policy.bias_logits entry " + std::to_string(j) + " has " +
                                  std::to_string(logits.size()) + " entries; this run needs " +
                                  std::to_string(expected_actions));
            policies.push_back(
                std::make_shared<BiasPolicy>("bias_" + std::to_string(j), logits));
        }
        return policies;
    }

    // Toy policies: one REINFORCE run per sub-policy, seeded from the
    // root seed so fit and backtest rebuild identical policies.
    ToyTrainOptions options;
    options.learning_rate = run.config.policy.toy_learning_rate;
    for (int j = 0; j < count; ++j) {
        const std::uint64_t seed =
            derive_seed(run.config.seed, "toy_policy",
                        static_cast<std::uint64_t>(split_index) * 64 +
                            static_cast<std::uint64_t>(j));
        if (run.config.mode == RunMode::oe) {
            auto orders = build_window_orders(run, split.train);
            const int horizon = uniform_horizon(orders, "training window");
            if (horizon + 1 != expected_actions)
                throw ValidationError("training orders have horizon " + std::to_string(horizon) +
                                      " but evaluation expects " +
                                      std::to_string(expected_actions - 1));
            OrderToyEnv env(std::move(orders), run.config.env.alpha);
            policies.push_back(train_toy_policy(env, pc.toy_episodes, seed, options));
        } else {
            StRunConfig cfg = make_st_run_config(run.config.env);
            cfg.indicator_window = run.config.sketch.window;
            cfg.normalize_indicators = run.config.sketch.normalize;
            StToyEnv env(run.market, split.train, cfg);
            env.set_action_count(expected_actions);
            policies.push_back(train_toy_policy(env, pc.toy_episodes, seed, options));
        }
    }
    return policies;
}

TunedPolicy make_tuned_policy(const std::vector<std::shared_ptr<const FrozenPolicy>>& policies,
                              const SketchTemplate& tmpl, const SketchParams& params) {
    if (policies.empty()) throw ValidationError("no sub-policies supplied");
    if (tmpl.mode().kind == SketchMode::Kind::single) {
        if (policies.size() != 1)
            throw ConfigError("single-model template needs exactly one policy, got " +
                              std::to_string(policies.size()));
        return {policies.front(), tmpl, params};
    }
    if (static_cast<int>(policies.size()) != tmpl.mode().ensemble_size)
        throw ConfigError("ensemble template needs " + std::to_string(tmpl.mode().ensemble_size) +
                          " policies, got " + std::to_string(policies.size()));
    return {std::make_shared<EnsemblePolicy>(policies), tmpl, params};
}

FitOutputs cmd_fit(const std::string& config_path) {
    const PreparedRun run = prepare_run(config_path);
    const RunConfig& config = run.config;
    std::filesystem::create_directories(config.output_dir);

    const OEFeatureSpec feature_spec{config.sketch.window, config.sketch.normalize};
    StRunConfig st_cfg = make_st_run_config(config.env);
    st_cfg.indicator_window = config.sketch.window;
    st_cfg.normalize_indicators = config.sketch.normalize;

    FitOutputs outputs;
    for (std::size_t i = 0; i < run.splits.size(); ++i) {
        const RollingSplit& split = run.splits[i];

        ThresholdBounds bounds;
        std::vector<OrderTask> val_orders;
        int expected_actions = 0;
        if (config.mode == RunMode::oe) {
            const auto train_orders = build_window_orders(run, split.train);
            uniform_horizon(train_orders, "training window");
            val_orders = build_window_orders(run, split.validation);
            const int horizon = uniform_horizon(val_orders, "validation window");
            expected_actions = horizon + 1;
            bounds = threshold_bounds_from_features(
                run.tmpl,
                collect_order_features(train_orders, config.sketch.window,
                                       config.sketch.normalize),
                config.sketch.threshold_lo_pct, config.sketch.threshold_hi_pct);
        } else {
            expected_actions = st_action_count(config.env);
            bounds = threshold_bounds_from_features(
                run.tmpl,
                collect_market_features(*run.market, split.train, config.sketch.window,
                                        config.sketch.normalize),
                config.sketch.threshold_lo_pct, config.sketch.threshold_hi_pct);
        }

        const auto policies =
            build_policies(run, split, static_cast<int>(i), expected_actions);
        const SketchSpace space(run.tmpl, bounds, config.sketch.temp_lo, config.sketch.temp_hi);
        const std::uint64_t objective_seed = derive_seed(config.seed, "fit_objective", i);

        const auto objective = [&](const SketchParams& params) -> double {
            try {
                const TunedPolicy tuned = make_tuned_policy(policies, run.tmpl, params);
                if (config.mode == RunMode::oe)
                    return evaluate_oe_objective(val_orders, tuned, feature_spec,
                                                 config.env.gamma, config.env.alpha,
                                                 objective_seed);
                return evaluate_st_objective(*run.market, split.validation, st_cfg, tuned,
                                             objective_seed);
            } catch (const EvalError&) {
                return std::numeric_limits<double>::quiet_NaN();
            }
        };

        FitResult result =
            fit_sketch(space, objective, config.budget, derive_seed(config.seed, "fit", i));
        if (!std::isfinite(result.best_objective))
            throw EvalError("every optimizer trial failed on split " + std::to_string(i) +
                            "; check window lengths and indicator warm-up");

        const std::string param_path =
            config.output_dir + "/params_split" + std::to_string(i) + ".json";
        const std::string history_path =
            config.output_dir + "/trials_split" + std::to_string(i) + ".csv";
        write_params(run.tmpl, result.best, param_path);
        write_trial_history(space.space(), result.history, history_path);
        outputs.param_files.push_back(param_path);
        outputs.history_files.push_back(history_path);
        outputs.results.push_back(std::move(result));
    }
    return outputs;
}

RunReport cmd_backtest(const std::string& config_path,
                       const std::vector<std::string>& param_files, const std::string& label) {
    const PreparedRun run = prepare_run(config_path);
    const RunConfig& config = run.config;
    if (param_files.size() != run.splits.size())
        throw ConfigError("expected " + std::to_string(run.splits.size()) +
                          " parameter files (one per split), got " +
                          std::to_string(param_files.size()));

    std::vector<SketchParams> params;
    for (const auto& path : param_files) {
        try {
            params.push_back(read_params(run.tmpl, path));
        } catch (const ValidationError& e) {
            throw ConfigError("parameter file '" + path +
                              "' does not match the template/mode: " + e.what());
        }
    }

    const OEFeatureSpec feature_spec{config.sketch.window, config.sketch.normalize};
    StRunConfig st_cfg = make_st_run_config(config.env);
    st_cfg.indicator_window = config.sketch.window;
    st_cfg.normalize_indicators = config.sketch.normalize;

    // Per-split artifacts shared by every seed.
    std::vector<std::vector<std::shared_ptr<const FrozenPolicy>>> split_policies;
    std::vector<std::vector<OrderTask>> split_orders;
    for (std::size_t i = 0; i < run.splits.size(); ++i) {
        int expected_actions = st_action_count(config.env);
        if (config.mode == RunMode::oe) {
            auto orders = build_window_orders(run, run.splits[i].test);
            expected_actions = uniform_horizon(orders, "test window") + 1;
            split_orders.push_back(std::move(orders));
        }
        split_policies.push_back(
            build_policies(run, run.splits[i], static_cast<int>(i), expected_actions));
    }

    RunReport report;
    report.label = label;
    report.mode = config.mode;
    report.test_window = {run.splits.front().test.start, run.splits.back().test.end};
    report.sketch_rules = render_sketch(run.tmpl);
    report.sketch_mode = run.tmpl.mode();
    report.params = params.back();
    report.config_echo = run.config_text;

    for (const std::uint64_t seed : config.seeds) {
        SeedResult seed_result;
        seed_result.seed = seed;
        if (config.mode == RunMode::oe) {
            std::vector<OEOrderResult> results;
            std::uint64_t order_counter = 0;
            for (std::size_t i = 0; i < run.splits.size(); ++i) {
                const TunedPolicy tuned =
                    make_tuned_policy(split_policies[i], run.tmpl, params[i]);
                const OEPolicyFn fn = [&](const PolicyState& state, const MarketFeatures& f) {
                    return tuned.decide(state, f).dist;
                };
                for (const auto& task : split_orders[i]) {
                    Rng rng(derive_seed(seed, "test_order", order_counter++));
                    const OEEpisodeResult episode = run_oe_episode(
                        task, fn, feature_spec, config.env.gamma, config.env.alpha, rng);
                    results.push_back(make_order_result(task.order_id, episode.achieved_price,
                                                        episode.baseline_price));
                }
            }
            seed_result.metrics.flavor = MetricReport::Flavor::oe;
            seed_result.metrics.oe = oe_metrics(results, config.env.periods_per_year);
        } else {
            EquityCurve chained;
            chained.periods_per_year = config.env.periods_per_year;
            double capital = config.env.capital;
            const bool record_timeline = report.trend_timeline.empty();
            for (std::size_t i = 0; i < run.splits.size(); ++i) {
                const TunedPolicy tuned =
                    make_tuned_policy(split_policies[i], run.tmpl, params[i]);
                const StDecisionFn decide = [&](const PolicyState& state,
                                                const MarketFeatures& f) {
                    return tuned.decide(state, f).dist;
                };
                const StLabelFn label_fn = [&](const MarketFeatures& f) {
                    return interpret(run.tmpl, params[i], f).trend;
                };
                StRunConfig cfg = st_cfg;
                cfg.initial_capital = capital;
                Rng rng(derive_seed(seed, "test_run", i));
                const StRunResult result =
                    run_st_backtest(*run.market, run.splits[i].test, cfg, decide, rng,
                                    record_timeline ? label_fn : StLabelFn{});
                for (std::size_t j = 0; j < result.curve.timestamps.size(); ++j) {
                    if (!chained.timestamps.empty() &&
                        result.curve.timestamps[j] <= chained.timestamps.back())
                        continue;
                    chained.timestamps.push_back(result.curve.timestamps[j]);
                    chained.values.push_back(result.curve.values[j]);
                }
                capital = chained.values.back();
                if (record_timeline)
                    report.trend_timeline.insert(report.trend_timeline.end(),
                                                 result.trend_timeline.begin(),
                                                 result.trend_timeline.end());
            }
            seed_result.metrics.flavor = MetricReport::Flavor::st;
            seed_result.metrics.st = st_metrics(chained);
            seed_result.curve = std::move(chained);
        }
        report.seeds.push_back(std::move(seed_result));
    }

    // Trial history travels with the parameter file when the fit wrote
    // its sibling log next to it.
    const std::string history_path = sibling_history_path(param_files.back());
    if (!history_path.empty() && std::filesystem::exists(history_path)) {
        auto [dims, trials] = read_trial_history(history_path);
        report.trial_dims = std::move(dims);
        report.trials = std::move(trials);
    }

    finalize_report(report);
    std::filesystem::create_directories(config.output_dir);
    save_report(report, config.output_dir + "/report_" + report.label + ".json");
    return report;
}

std::vector<IngestSummary> cmd_ingest(const std::string& config_path,
                                      const std::string& export_dir) {
    const RunConfig config = load_run_config(config_path);
    if (!export_dir.empty()) std::filesystem::create_directories(export_dir);
    std::vector<IngestSummary> summaries;
    std::vector<std::string> paths = config.data.paths;
    if (!config.data.index_path.empty()) paths.push_back(config.data.index_path);
    for (const auto& path : paths) {
        AssetSeries series = load_series(path, config.data.schema, "", config.data.interval);
        if (config.data.calendar) validate_calendar(series, *config.data.calendar);
        IngestSummary summary;
        summary.asset_id = series.asset_id;
        summary.bars = series.bars.size();
        summary.interval = series.interval;
        summary.range = {series.bars.front().timestamp,
                         series.bars.back().timestamp + series.interval};
        summary.min_close = series.bars.front().close;
        summary.max_close = series.bars.front().close;
        for (const auto& bar : series.bars) {
            summary.min_close = std::min(summary.min_close, bar.close);
            summary.max_close = std::max(summary.max_close, bar.close);
        }
        if (!export_dir.empty())
            export_series(series, export_dir + "/" + series.asset_id + ".csv",
                          config.data.schema);
        summaries.push_back(std::move(summary));
    }
    return summaries;
}

std::string cmd_report(const std::vector<std::string>& report_paths,
                       const std::string& export_dir) {
    if (report_paths.empty()) throw ValidationError("comparison needs at least one report");
    std::vector<RunReport> reports;
    for (const auto& path : report_paths) reports.push_back(load_report(path));
    const std::string table = render_comparison(reports);
    if (!export_dir.empty()) {
        std::filesystem::create_directories(export_dir);
        for (const auto& report : reports)
            for (const auto& seed : report.seeds) {
                if (seed.curve.values.empty()) continue;
                write_equity_curve(seed.curve, export_dir + "/" + report.label + "_seed" +
                                                   std::to_string(seed.seed) + ".csv");
            }
    }
    return table;
}

std::string cmd_sketch_check(const std::string& rule_path, int ensemble) {
    const SketchMode mode =
        ensemble > 1 ? SketchMode::ensemble(ensemble) : SketchMode::single_model();
    const SketchTemplate tmpl = parse_sketch(read_text_file(rule_path, "sketch rule file"), mode);
    std::ostringstream out;
    out << "ok: " << tmpl.conditionals().size() << " conditionals, " << tmpl.threshold_count()
        << " threshold holes, " << tmpl.directive_count() << " directive holes, "
        << tmpl.scalar_count() << " scalar parameters\n";
    out << render_sketch(tmpl);
    return out.str();
}

}  // namespace trendtune
