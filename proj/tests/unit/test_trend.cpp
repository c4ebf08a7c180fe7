#include <gtest/gtest.h>

#include "support.hpp"

using namespace cpd;

TEST(Ema, Examples) {
    const std::vector<double> c(20, 4.5);
    for (double v : ema(c, 7)) EXPECT_DOUBLE_EQ(v, 4.5);
    const std::vector<double> x{3, -1, 8, 2};
    EXPECT_EQ(ema(x, 1), x);
    const std::vector<double> two{0, 1};
    EXPECT_DOUBLE_EQ(ema(two, 3)[1], 0.5);
    EXPECT_THROW(ema(x, 0), std::invalid_argument);
}

TEST(Macd, RampAndOffsets) {
    std::vector<double> ramp(100), shifted(100);
    for (int n = 1; n <= 100; ++n) {
        ramp[n - 1] = n;
        shifted[n - 1] = n + 1000.0;
    }
    const auto m = macd(ramp, 12, 26);
    EXPECT_EQ(m[0], 0.0);
    for (std::size_t i = 1; i < m.size(); ++i) EXPECT_GT(m[i], 0.0) << i;
    const auto ms = macd(shifted, 12, 26);
    for (std::size_t i = 0; i < m.size(); ++i) EXPECT_NEAR(m[i], ms[i], 1e-9);
    EXPECT_THROW(macd(ramp, 26, 12), std::invalid_argument);
}

TEST(TrendIndicator, ConstantIsZeroAndDown) {
    const std::vector<double> c(60, 2.0);
    const auto p = ti_point(c, 40, {});
    EXPECT_EQ(p.ti_value, 0.0);
    EXPECT_EQ(p.direction, Direction::Down);
    const auto i = ti_interval(c, 20, {});
    EXPECT_EQ(i.ti_value, 0.0);
    EXPECT_EQ(i.direction, Direction::Down);
    EXPECT_EQ(i.mode, TrendMode::Interval);
}

TEST(TrendIndicator, StepDirection) {
    std::vector<double> up(100, 0.0), down(100, 0.0);
    for (std::size_t i = 50; i < 100; ++i) {
        up[i] = 5.0;
        down[i] = -5.0;
    }
    EXPECT_EQ(ti_point(up, 52, {}).direction, Direction::Up);
    EXPECT_EQ(ti_point(down, 52, {}).direction, Direction::Down);
    EXPECT_EQ(ti_interval(up, 50, {}).direction, Direction::Up);
    EXPECT_EQ(ti_interval(down, 50, {}).direction, Direction::Down);
}

TEST(TrendIndicator, OddUnderSignFlip) {
    const Matrix x = test::gaussian(200, 1, 17) * 3.0;
    const auto v = test::to_vec(x);
    std::vector<double> neg(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) neg[i] = -v[i];
    const auto a = ti_series(v, {});
    const auto b = ti_series(neg, {});
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], -b[i], 1e-12);
}

TEST(TrendIndicator, TranslationInvariant) {
    const auto v = test::to_vec(test::gaussian(120, 1, 18));
    std::vector<double> w(v);
    for (auto& e : w) e += 250.0;
    const auto a = ti_series(v, {});
    const auto b = ti_series(w, {});
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-9);
}

TEST(TrendIndicator, IntervalWithZeroWindowIsPoint) {
    const auto v = test::to_vec(test::gaussian(80, 1, 19));
    MacdParams p;
    p.h = 0;
    EXPECT_DOUBLE_EQ(ti_interval(v, 33, p).ti_value, ti_point(v, 33, p).ti_value);
}

TEST(TrendIndicator, IntervalSumsPoints) {
    const auto v = test::to_vec(test::gaussian(80, 1, 20));
    const auto ti = ti_series(v, {});
    double sum = 0.0;
    for (std::size_t k = 30; k <= 40; ++k) sum += ti[k - 1];
    const auto r = ti_interval(v, 30, {});
    EXPECT_NEAR(r.ti_value, sum, 1e-12);
    EXPECT_EQ(r.span, 11u);
}

TEST(TrendIndicator, WindowAndIndexChecks) {
    const std::vector<double> v(50, 1.0);
    EXPECT_THROW(ti_point(v, 0, {}), std::out_of_range);
    EXPECT_THROW(ti_point(v, 51, {}), std::out_of_range);
    EXPECT_THROW(ti_interval(v, 41, {}), std::out_of_range);
    EXPECT_NO_THROW(ti_interval(v, 40, {}));
    const auto c = ti_interval_clamped(v, 45, {});
    EXPECT_EQ(c.span, 6u);
}

TEST(MacdParams, Validation) {
    MacdParams p;
    EXPECT_NO_THROW(p.validate());
    p.p1 = 1;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p = {};
    p.p2 = 30;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    std::vector<double> v(10, 0.0);
    EXPECT_THROW(ti_series(v, p), std::invalid_argument);
}

TEST(TrendIndicator, IntervalBeatsPointOnNoisySteps) {
    int point_ok = 0, interval_ok = 0;
    for (int s = 0; s < 300; ++s) {
        const double sign = s % 2 ? 1.0 : -1.0;
        const auto v = test::to_vec(test::steps(120, {60}, {0.0, 3.0 * sign}, 500 + s));
        const Direction want = sign > 0 ? Direction::Up : Direction::Down;
        point_ok += ti_point(v, 61, {}).direction == want;
        interval_ok += ti_interval(v, 61, {}).direction == want;
    }
    EXPECT_GE(interval_ok, 285);
    EXPECT_GT(interval_ok, point_ok);
}
