#include <doctest.h>

#include <cmath>
#include <vector>

#include "test_util.hpp"
#include "trendtune/errors.hpp"
#include "trendtune/indicators.hpp"
#include "trendtune/rng.hpp"

using namespace trendtune;
using doctest::Approx;

TEST_CASE("volatility is the population variance of the window") {
    CHECK(volatility(std::vector<double>{5, 5, 5, 5}) == 0.0);
    CHECK(volatility(std::vector<double>{1, 3}) == Approx(1.0));
    CHECK(volatility(std::vector<double>{1, 2, 3}) == Approx(2.0 / 3.0));
    CHECK_THROWS_AS(volatility(std::vector<double>{1}), DomainError);
}

TEST_CASE("downside risk averages only below-mean shortfalls") {
    CHECK(downside_risk(std::vector<double>{2, 2, 2}) == 0.0);
    CHECK(downside_risk(std::vector<double>{1, 3}) == Approx(1.0));
    // mean 2; only the two 1s fall below, each with shortfall 1.
    CHECK(downside_risk(std::vector<double>{1, 1, 4}) == Approx(1.0));
}

TEST_CASE("growth rate is zero for flat or falling windows") {
    CHECK(growth_rate(100.0, 110.0) == Approx(0.10));
    CHECK(growth_rate(100.0, 90.0) == 0.0);
    CHECK(growth_rate(100.0, 100.0) == 0.0);
    CHECK_THROWS_AS(growth_rate(0.0, 1.0), DomainError);
}

TEST_CASE("downside risk is bounded by the variance over the full window") {
    // dr² averages shortfalls over the below-mean count n, while vol
    // averages all g squared deviations, so dr²·n ≤ vol·g. The tighter
    // dr² ≤ vol does NOT hold in general: [1,4,4,4] has dr² = 5.0625
    // but vol = 1.6875.
    const std::vector<double> counter{1, 4, 4, 4};
    const double dr = downside_risk(counter);
    CHECK(dr * dr == Approx(5.0625));
    CHECK(volatility(counter) == Approx(1.6875));
    CHECK(dr * dr > volatility(counter));

    Rng rng(42);
    for (int trial = 0; trial < 500; ++trial) {
        const int g = 2 + static_cast<int>(rng.uniform_int(30));
        std::vector<double> window(g);
        double mean = 0.0;
        for (double& x : window) {
            x = rng.uniform(1.0, 100.0);
            mean += x;
        }
        mean /= g;
        std::size_t below = 0;
        double shortfall_sq = 0.0;
        for (double x : window) {
            if (x < mean) {
                ++below;
                shortfall_sq += (mean - x) * (mean - x);
            }
        }
        const double dr_brute = below == 0 ? 0.0 : std::sqrt(shortfall_sq / below);
        const double dr_lib = downside_risk(window);
        CHECK(dr_lib == Approx(dr_brute).epsilon(1e-12));
        CHECK(dr_lib * dr_lib * static_cast<double>(below) <=
              volatility(window) * g + 1e-9);
    }
}

TEST_CASE("market_features windows the closes and enforces warm-up") {
    std::vector<double> closes(20, 10.0);
    closes[19] = 12.0;  // end > start in the window ending at 19

    const MarketFeatures f = market_features(closes, 19, 14);
    CHECK(f.t == 19);
    CHECK(f.g == 14);
    CHECK(f.gr == Approx(0.2));
    CHECK(f.vol > 0.0);
    CHECK(f.dr > 0.0);

    CHECK_THROWS_AS(market_features(closes, 5, 14), DomainError);   // warm-up
    CHECK_THROWS_AS(market_features(closes, 25, 14), DomainError);  // out of range
    CHECK_THROWS_AS(market_features(closes, 19, 1), DomainError);   // window too small
}

TEST_CASE("normalized indicators are invariant under price scaling") {
    Rng rng(7);
    std::vector<double> closes = tt_test::random_walk(40, 11);
    std::vector<double> scaled(closes.size());

    for (double scale : {0.01, 3.0, 250.0}) {
        for (std::size_t i = 0; i < closes.size(); ++i) scaled[i] = closes[i] * scale;
        for (std::size_t t = 13; t < closes.size(); ++t) {
            const MarketFeatures a = market_features(closes, t, 14, true);
            const MarketFeatures b = market_features(scaled, t, 14, true);
            CHECK(b.vol == Approx(a.vol).epsilon(1e-9));
            CHECK(b.dr == Approx(a.dr).epsilon(1e-9));
            CHECK(b.gr == Approx(a.gr).epsilon(1e-9));
        }
    }
}

TEST_CASE("state features on a constant series are flat/neutral") {
    const AssetSeries s =
        tt_test::make_series("c", 80, 86400, 0, [](std::size_t) { return 25.0; });
    const StateFeatureTable table(s);
    CHECK(table.first_valid() == kStateFeatureWarmup);
    CHECK(table.size() == 80);

    const StateFeatures& f = table.at(60);
    CHECK(f.macd == Approx(0.0));
    CHECK(f.macds == Approx(0.0));
    CHECK(f.boll_ub == Approx(25.0));
    CHECK(f.boll_lb == Approx(25.0));
    CHECK(f.rsi_30 == 50.0);  // zero movement maps to neutral
    CHECK(f.cci_30 == 0.0);   // zero mean absolute deviation
    CHECK(f.dx_30 == 0.0);
    CHECK(f.close_30_sma == Approx(25.0));
    CHECK(f.close_60_sma == Approx(25.0));
}

TEST_CASE("state features on a linear ramp match hand-computed values") {
    // close_i = i + 1 with flat high/low bars.
    const AssetSeries s =
        tt_test::make_series("r", 61, 86400, 0, [](std::size_t i) { return double(i + 1); });
    const StateFeatures f = state_features(s, 60);

    CHECK(f.close_30_sma == Approx(46.5));
    CHECK(f.close_60_sma == Approx(31.5));
    CHECK(f.rsi_30 == Approx(100.0));  // gains only
    CHECK(f.dx_30 == Approx(100.0));   // upward movement only
    CHECK(f.cci_30 == Approx(128.88888888888891).epsilon(1e-12));
    CHECK(f.boll_ub == Approx(63.032562594670793).epsilon(1e-12));
    CHECK(f.boll_lb == Approx(39.967437405329207).epsilon(1e-12));
    // EMA(12) − EMA(26) ladder, both seeded at the first close.
    CHECK(f.macd == Approx(6.876795784458217).epsilon(1e-12));
    CHECK(f.macds == Approx(6.8193396284368974).epsilon(1e-12));
}

TEST_CASE("state feature warm-up is enforced") {
    const AssetSeries s =
        tt_test::make_series("w", 61, 86400, 0, [](std::size_t i) { return 10.0 + i; });
    const StateFeatureTable table(s);
    CHECK_THROWS_AS(table.at(59), DomainError);
    CHECK_NOTHROW(table.at(60));
    CHECK_THROWS_AS(table.at(61), DomainError);  // out of range
    CHECK_THROWS_AS(state_features(s, 10), DomainError);
}

TEST_CASE("feature serialization order is stable") {
    StateFeatures f;
    f.macd = 1;
    f.close_60_sma = 9;
    const auto arr = to_array(f);
    CHECK(arr[0] == 1.0);
    CHECK(arr[8] == 9.0);
    CHECK(state_feature_names()[0] == std::string("macd"));
    CHECK(state_feature_names()[8] == std::string("close_60_sma"));
}
