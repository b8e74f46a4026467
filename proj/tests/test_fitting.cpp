#include <doctest.h>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "test_util.hpp"
#include "trendtune/errors.hpp"
#include "trendtune/fitting.hpp"
#include "trendtune/rng.hpp"

using namespace trendtune;
using doctest::Approx;

namespace {

ThresholdBounds unit_bounds(int holes) {
    ThresholdBounds b;
    b.lo.assign(holes, 0.0);
    b.hi.assign(holes, 1.0);
    return b;
}

MarketFeatures fv(double vol, double dr, double gr) {
    MarketFeatures f;
    f.vol = vol;
    f.dr = dr;
    f.gr = gr;
    return f;
}

}  // namespace

TEST_CASE("threshold bounds follow the per-indicator percentiles") {
    // vol spans 0..1, dr spans 0..0.5, gr spans 0..0.1 across 101 samples.
    std::vector<MarketFeatures> features;
    for (int i = 0; i <= 100; ++i) {
        features.push_back(fv(i / 100.0, i / 200.0, i / 1000.0));
    }
    const SketchTemplate tmpl = default_template();
    const ThresholdBounds b = threshold_bounds_from_features(tmpl, features);
    REQUIRE(b.lo.size() == 8);

    // Holes 0,2,4,6 bind vol; 1,3 bind dr; 5,7 bind gr.
    for (int hole : {0, 2, 4, 6}) {
        CHECK(b.lo[hole] == Approx(0.01));
        CHECK(b.hi[hole] == Approx(0.99));
    }
    for (int hole : {1, 3}) {
        CHECK(b.lo[hole] == Approx(0.005));
        CHECK(b.hi[hole] == Approx(0.495));
    }
    for (int hole : {5, 7}) {
        CHECK(b.lo[hole] == Approx(0.001));
        CHECK(b.hi[hole] == Approx(0.099));
    }

    SUBCASE("custom percentiles move the band") {
        const ThresholdBounds wide = threshold_bounds_from_features(tmpl, features, 0.25, 0.75);
        CHECK(wide.lo[0] == Approx(0.25));
        CHECK(wide.hi[0] == Approx(0.75));
    }
    SUBCASE("constant indicators get a widened band") {
        std::vector<MarketFeatures> flat(10, fv(2.0, 0.0, 0.0));
        const ThresholdBounds w = threshold_bounds_from_features(tmpl, flat);
        for (int h = 0; h < 8; ++h) CHECK(w.lo[h] < w.hi[h]);
        CHECK(w.lo[0] == Approx(1.0));  // 2.0 widened by half its magnitude
        CHECK(w.hi[0] == Approx(3.0));
    }
    SUBCASE("no features is an error") {
        CHECK_THROWS_AS(threshold_bounds_from_features(tmpl, {}), DomainError);
    }
}

TEST_CASE("sketch search space has one dimension per scalar degree of freedom") {
    const SketchSpace single(default_template(), unit_bounds(8));
    CHECK(single.space().dims.size() == 13);  // 8 thresholds + 5 temperatures
    CHECK(single.space().dims[0].name == "threshold_0");
    CHECK(single.space().dims[8].name == "log_phi_steady_descend");

    const SketchSpace trio(default_template(SketchMode::ensemble(3)), unit_bounds(8));
    CHECK(trio.space().dims.size() == 18);  // 8 thresholds + 5 trends × 2 stick coords
    CHECK(trio.space().dims[8].name == "w_steady_descend_0");

    SUBCASE("temperature dimensions live in log space") {
        const auto& dim = single.space().dims[8];
        CHECK(dim.lo == Approx(std::log(0.1)));
        CHECK(dim.hi == Approx(std::log(10.0)));
    }
    SUBCASE("bounds must match the hole count") {
        CHECK_THROWS_AS(SketchSpace(default_template(), unit_bounds(5)), ValidationError);
    }
}

TEST_CASE("identity probe decodes to exact identity tuning") {
    SUBCASE("single model") {
        const SketchSpace space(default_template(), unit_bounds(8));
        const auto probes = space.probe_params();
        REQUIRE(probes.size() == 1);
        for (const auto& d : probes[0].directives) {
            REQUIRE(d.size() == 1);
            CHECK(d[0] == 1.0);  // bit-exact: exp(0) after the log-space clamp
        }
        for (double t : probes[0].thresholds) CHECK(t == 0.5);  // bound midpoints

        // The encoded probe lies inside the search box.
        const std::vector<double> x = space.encode(probes[0]);
        for (std::size_t d = 0; d < x.size(); ++d) {
            CHECK(x[d] >= space.space().dims[d].lo - 1e-12);
            CHECK(x[d] <= space.space().dims[d].hi + 1e-12);
        }
        // Decoding the encoding lands on the same parameters.
        const SketchParams back = space.decode(x);
        CHECK(back.directives[0][0] == 1.0);
    }
    SUBCASE("ensemble adds one all-trends one-hot probe per sub-policy") {
        const SketchSpace space(default_template(SketchMode::ensemble(3)), unit_bounds(8));
        const auto probes = space.probe_params();
        REQUIRE(probes.size() == 4);

        for (const auto& d : probes[0].directives) {
            REQUIRE(d.size() == 3);
            for (double w : d) CHECK(w == Approx(1.0 / 3.0));
        }
        for (int j = 0; j < 3; ++j) {
            const SketchParams& one_hot = probes[static_cast<std::size_t>(j) + 1];
            for (const auto& d : one_hot.directives) {
                for (int i = 0; i < 3; ++i) CHECK(d[static_cast<std::size_t>(i)] ==
                                                  (i == j ? 1.0 : 0.0));
            }
            // One-hots survive the encode/decode round trip exactly.
            const SketchParams back = space.decode(space.encode(one_hot));
            for (std::size_t c = 0; c < back.directives.size(); ++c) {
                for (int i = 0; i < 3; ++i) {
                    CHECK(back.directives[c][static_cast<std::size_t>(i)] ==
                          one_hot.directives[c][static_cast<std::size_t>(i)]);
                }
            }
        }
    }
}

TEST_CASE("encode/decode round trips preserve valid parameters") {
    Rng rng(41);
    SUBCASE("single-model temperatures and thresholds") {
        const SketchSpace space(default_template(), unit_bounds(8));
        for (int trial = 0; trial < 200; ++trial) {
            SketchParams p;
            for (int h = 0; h < 8; ++h) p.thresholds.push_back(rng.uniform());
            for (int c = 0; c < 5; ++c) p.directives.push_back({std::exp(rng.uniform(-2.3, 2.3))});
            const SketchParams back = space.decode(space.encode(p));
            for (int h = 0; h < 8; ++h)
                CHECK(back.thresholds[h] == Approx(p.thresholds[h]).epsilon(1e-12));
            for (int c = 0; c < 5; ++c)
                CHECK(back.directives[c][0] == Approx(p.directives[c][0]).epsilon(1e-12));
        }
    }
    SUBCASE("ensemble weights on the simplex") {
        const SketchSpace space(default_template(SketchMode::ensemble(3)), unit_bounds(8));
        for (int trial = 0; trial < 200; ++trial) {
            SketchParams p;
            for (int h = 0; h < 8; ++h) p.thresholds.push_back(rng.uniform());
            for (int c = 0; c < 5; ++c) {
                double a = rng.uniform(), b = rng.uniform(), cc = rng.uniform();
                const double sum = a + b + cc;
                p.directives.push_back({a / sum, b / sum, cc / sum});
            }
            const SketchParams back = space.decode(space.encode(p));
            for (int c = 0; c < 5; ++c) {
                double total = 0.0;
                for (int i = 0; i < 3; ++i) {
                    CHECK(back.directives[c][i] == Approx(p.directives[c][i]).epsilon(1e-9));
                    total += back.directives[c][i];
                }
                CHECK(total == Approx(1.0).epsilon(1e-12));
            }
        }
    }
    SUBCASE("every decoded point is a valid parameter set") {
        const SketchSpace space(default_template(SketchMode::ensemble(3)), unit_bounds(8));
        const auto& dims = space.space().dims;
        for (int trial = 0; trial < 200; ++trial) {
            std::vector<double> x(dims.size());
            for (std::size_t d = 0; d < dims.size(); ++d)
                x[d] = rng.uniform(dims[d].lo, dims[d].hi);
            const SketchParams p = space.decode(x);
            CHECK_NOTHROW(validate_params(space.sketch(), p));
        }
    }
}

TEST_CASE("fit_sketch runs probes first, so it never regresses below them") {
    const SketchSpace space(default_template(), unit_bounds(8));
    // Reward temperatures near 2; the identity probe scores lower.
    const auto objective = [](const SketchParams& p) {
        double score = 0.0;
        for (const auto& d : p.directives) score -= (d[0] - 2.0) * (d[0] - 2.0);
        return score;
    };
    const FitResult fit = fit_sketch(space, objective, 12, 5);
    CHECK(fit.history.size() == 12);

    const SketchParams identity = space.probe_params()[0];
    CHECK(fit.best_objective >= objective(identity));
    CHECK_NOTHROW(validate_params(space.sketch(), fit.best));

    // The first trial IS the identity probe.
    CHECK(fit.history[0].objective == Approx(objective(identity)));
}

TEST_CASE("oe objective is deterministic per seed and fails on empty input") {
    std::vector<OrderTask> orders;
    for (int i = 0; i < 5; ++i) {
        OrderTask t;
        t.order_id = "o" + std::to_string(i);
        t.asset_id = "abc";
        t.price_path = tt_test::random_walk(6, 100 + i);
        orders.push_back(t);
    }
    auto base = std::make_shared<BiasPolicy>("b", std::vector<double>(7, 0.0));
    SketchParams params;
    params.thresholds.assign(8, 0.5);
    params.directives.assign(5, {1.0});
    const TunedPolicy tuned(base, default_template(), params);

    const double a = evaluate_oe_objective(orders, tuned, {}, 1.0, 0.01, 11);
    const double b = evaluate_oe_objective(orders, tuned, {}, 1.0, 0.01, 11);
    const double c = evaluate_oe_objective(orders, tuned, {}, 1.0, 0.01, 12);
    CHECK(a == b);
    CHECK(std::isfinite(a));
    CHECK(a != c);

    CHECK_THROWS_AS(evaluate_oe_objective({}, tuned, {}, 1.0, 0.01, 1), EvalError);
}

TEST_CASE("st objective scores the validation Sharpe deterministically") {
    const auto closes = tt_test::random_walk(300, 55, 100.0, 1.5);
    std::vector<AssetSeries> assets;
    assets.push_back(tt_test::make_series("aaa", 300, 86400, 0,
                                          [&](std::size_t i) { return closes[i]; }));
    const StMarket market(std::move(assets));

    StRunConfig config;
    config.initial_capital = 100000.0;
    config.caps.max_units = 2;

    auto base = std::make_shared<BiasPolicy>("b", std::vector<double>(5, 0.0));
    SketchParams params;
    params.thresholds.assign(8, 0.5);
    params.directives.assign(5, {1.0});
    const TunedPolicy tuned(base, default_template(), params);

    const TimeRange window{100 * 86400, 220 * 86400};
    const double a = evaluate_st_objective(market, window, config, tuned, 3);
    const double b = evaluate_st_objective(market, window, config, tuned, 3);
    CHECK(a == b);
    CHECK(std::isfinite(a));
}

TEST_CASE("feature collection windows the data and rejects tiny windows") {
    std::vector<OrderTask> orders(1);
    orders[0].order_id = "o";
    orders[0].price_path = {100.0, 101.0, 102.0};
    orders[0].history = {99.0, 99.5};

    // known = 5 prices; g = 3 gives features at t = 2,3,4.
    const auto features = collect_order_features(orders, 3, false);
    CHECK(features.size() == 3);
    CHECK_THROWS_AS(collect_order_features(orders, 1, false), DomainError);

    const auto closes = tt_test::random_walk(50, 8);
    std::vector<AssetSeries> assets;
    assets.push_back(tt_test::make_series("aaa", 50, 86400, 0,
                                          [&](std::size_t i) { return closes[i]; }));
    const StMarket market(std::move(assets));
    // Bars 0..49; window covers bars 20..39; all have 14-bar history.
    const auto mf = collect_market_features(market, {20 * 86400, 40 * 86400}, 14, false);
    CHECK(mf.size() == 20);
    // From the series start the first 13 bars lack warm-up.
    const auto from_zero = collect_market_features(market, {0, 40 * 86400}, 14, false);
    CHECK(from_zero.size() == 27);
    CHECK_THROWS_AS(collect_market_features(market, {0, 40 * 86400}, 0, false), DomainError);
}

TEST_CASE("trial history lands on disk with one row per trial") {
    const auto dir = tt_test::temp_dir("fitting_history");
    SearchSpace space;
    space.dims.push_back({"alpha", 0.0, 1.0});
    space.dims.push_back({"beta", -1.0, 1.0});
    std::vector<Trial> history;
    history.push_back({0, {0.5, -0.25}, 1.5});
    history.push_back({1, {0.125, 0.75}, -std::numeric_limits<double>::infinity()});

    const std::string path = (dir / "trials.csv").string();
    write_trial_history(space, history, path);
    const std::string text = tt_test::read_file(path);
    CHECK(text.find("trial,alpha,beta,objective") == 0);
    CHECK(text.find("0,0.5,-0.25,1.5") != std::string::npos);
    CHECK(text.find("-inf") != std::string::npos);
}
