// Microbenchmarks for the hot paths: per-step tuning, sketch
// interpretation, indicator table construction, surrogate fitting and
// the two environment inner loops.
#include <benchmark/benchmark.h>

#include <cstdint>
#include <memory>
#include <vector>

#include "trendtune/env_oe.hpp"
#include "trendtune/env_st.hpp"
#include "trendtune/gp.hpp"
#include "trendtune/indicators.hpp"
#include "trendtune/policy.hpp"
#include "trendtune/rng.hpp"
#include "trendtune/sketch.hpp"

namespace {

using namespace trendtune;

PolicyLogits make_logits(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    PolicyLogits logits;
    for (std::size_t i = 0; i < n; ++i) logits.logits.push_back(rng.uniform(-5.0, 5.0));
    return logits;
}

std::vector<double> make_closes(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> closes;
    double p = 100.0;
    for (std::size_t i = 0; i < n; ++i) {
        p = std::max(1.0, p + rng.uniform(-1.0, 1.0));
        closes.push_back(p);
    }
    return closes;
}

void bm_temperature_tune(benchmark::State& state) {
    const PolicyLogits logits = make_logits(static_cast<std::size_t>(state.range(0)), 1);
    double phi = 0.5;
    for (auto _ : state) {
        benchmark::DoNotOptimize(temperature_tune(logits, phi));
        phi = phi < 5.0 ? phi + 0.001 : 0.5;
    }
}
BENCHMARK(bm_temperature_tune)->Arg(25)->Arg(201);

void bm_ensemble_tune(benchmark::State& state) {
    std::vector<std::shared_ptr<const FrozenPolicy>> subs;
    for (int i = 0; i < 3; ++i)
        subs.push_back(std::make_shared<BiasPolicy>(
            "s" + std::to_string(i),
            make_logits(static_cast<std::size_t>(state.range(0)), 10 + i).logits));
    const EnsemblePolicy ensemble(subs);
    const std::vector<double> weights{0.5, 0.3, 0.2};
    const PolicyState empty;
    for (auto _ : state) benchmark::DoNotOptimize(ensemble_tune(ensemble, weights, empty));
}
BENCHMARK(bm_ensemble_tune)->Arg(25)->Arg(201);

void bm_interpret(benchmark::State& state) {
    const SketchTemplate tmpl = default_template(SketchMode::single_model());
    SketchParams params;
    params.thresholds = {1.0, 0.5, 4.0, 2.0, 1.0, 0.5, 4.0, 2.0};
    params.directives.assign(5, {1.0});
    MarketFeatures features;
    features.vol = 2.0;
    features.dr = 1.0;
    features.gr = 0.3;
    for (auto _ : state) {
        benchmark::DoNotOptimize(interpret(tmpl, params, features));
        features.gr = -features.gr;
    }
}
BENCHMARK(bm_interpret);

void bm_state_feature_table(benchmark::State& state) {
    AssetSeries series;
    series.asset_id = "bench";
    series.interval = 86400;
    const std::vector<double> closes =
        make_closes(static_cast<std::size_t>(state.range(0)), 2);
    for (std::size_t i = 0; i < closes.size(); ++i) {
        Bar bar;
        bar.timestamp = static_cast<std::int64_t>(i) * series.interval;
        bar.open = bar.high = bar.low = bar.close = closes[i];
        bar.volume = 1000.0;
        series.bars.push_back(bar);
    }
    for (auto _ : state) benchmark::DoNotOptimize(StateFeatureTable(series));
}
BENCHMARK(bm_state_feature_table)->Arg(256)->Arg(2048);

void bm_gp_fit_predict(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    Rng rng(3);
    std::vector<std::vector<double>> inputs;
    std::vector<double> targets;
    for (std::size_t i = 0; i < n; ++i) {
        inputs.push_back({rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)});
        targets.push_back(rng.normal());
    }
    const std::vector<double> query{0.4, 0.6};
    for (auto _ : state) {
        Rng fit_rng(4);
        GaussianProcess gp;
        gp.fit(inputs, targets, fit_rng);
        benchmark::DoNotOptimize(gp.predict(query));
    }
}
BENCHMARK(bm_gp_fit_predict)->Arg(16)->Arg(64);

void bm_st_step(benchmark::State& state) {
    TradeCosts costs;
    ActionCaps caps;
    caps.unit = ActionCaps::Unit::shares;
    caps.max_units = 100;
    const std::vector<double> prices{100.0, 50.0};
    const std::vector<int> action{40, -20};
    Portfolio p;
    p.balance = 1e6;
    p.holdings = {100.0, 100.0};
    for (auto _ : state) {
        Portfolio scratch = p;
        benchmark::DoNotOptimize(st_step(scratch, prices, action, caps, costs, 0));
    }
}
BENCHMARK(bm_st_step);

void bm_run_oe_episode(benchmark::State& state) {
    OrderTask task;
    task.order_id = "bench";
    task.asset_id = "a";
    task.side = OrderSide::sell;
    task.target_quantity = 1.0;
    task.history = make_closes(28, 5);
    task.price_path = make_closes(static_cast<std::size_t>(state.range(0)), 6);
    const OEFeatureSpec spec{14, false};
    const int actions = static_cast<int>(task.price_path.size()) + 1;
    const OEPolicyFn policy = [&](const PolicyState&, const MarketFeatures&) {
        ActionDistribution dist;
        dist.probs.assign(static_cast<std::size_t>(actions),
                          1.0 / static_cast<double>(actions));
        return dist;
    };
    std::uint64_t seed = 0;
    for (auto _ : state) {
        Rng rng(++seed);
        benchmark::DoNotOptimize(run_oe_episode(task, policy, spec, 1.0, 0.01, rng));
    }
}
BENCHMARK(bm_run_oe_episode)->Arg(24);

}  // namespace

BENCHMARK_MAIN();
