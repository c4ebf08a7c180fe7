#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"

using namespace cpd;

TEST(TimeSeries, RejectsEmptyAndNonFinite) {
    EXPECT_THROW(TimeSeries(Matrix(0, 1)), std::invalid_argument);
    Matrix bad(2, 1);
    bad << 1.0, std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(TimeSeries{bad}, std::invalid_argument);
    EXPECT_THROW(TimeSeries(Matrix::Zero(3, 1), 0.0), std::invalid_argument);
}

TEST(TimeSeries, OneBasedAccess) {
    const auto s = TimeSeries::from_scalars({3.0, 4.0, 5.0}, 2.0);
    EXPECT_EQ(s.size(), 3u);
    EXPECT_EQ(s.dim(), 1u);
    EXPECT_DOUBLE_EQ(s.sample(1)(0), 3.0);
    EXPECT_DOUBLE_EQ(s.sample(3)(0), 5.0);
    EXPECT_DOUBLE_EQ(s.time_of(3), 4.0);
    EXPECT_THROW(s.sample(0), std::out_of_range);
    EXPECT_THROW(s.sample(4), std::out_of_range);
}

TEST(TimeSeries, ReversedAndSegments) {
    const auto s = TimeSeries::from_scalars({1, 2, 3, 4, 5});
    const auto r = s.reversed();
    EXPECT_DOUBLE_EQ(r.sample(1)(0), 5.0);
    EXPECT_DOUBLE_EQ(r.sample(5)(0), 1.0);

    const auto seg = s.segment(2, 4);
    EXPECT_EQ(seg.size(), 3u);
    EXPECT_DOUBLE_EQ(seg.block()(0, 0), 2.0);
    EXPECT_DOUBLE_EQ(sample_mean(seg)(0), 3.0);
    EXPECT_EQ(seg.to_series().size(), 3u);
    EXPECT_THROW(s.segment(3, 2), std::out_of_range);
    EXPECT_THROW(s.segment(1, 6), std::out_of_range);
}

TEST(Csv, SkipsHeaderAndBlankLines) {
    std::istringstream in("t,a,b\n\n0,1.5,2\n1,2.5,3\n");
    const auto s = read_csv(in, {2, 3});
    ASSERT_EQ(s.size(), 2u);
    ASSERT_EQ(s.dim(), 2u);
    EXPECT_DOUBLE_EQ(s.values()(1, 0), 2.5);
    EXPECT_DOUBLE_EQ(s.values()(1, 1), 3.0);
}

TEST(Csv, ParseErrorNamesRowAndColumn) {
    std::istringstream in("x\n1\n2\nabc\n");
    try {
        read_csv(in, {1});
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.row(), 4u);
        EXPECT_EQ(e.column(), 1u);
    }
}

TEST(Csv, MissingColumnAndNonFiniteRejected) {
    std::istringstream missing("1,2\n3\n");
    EXPECT_THROW(read_csv(missing, {2}), ParseError);
    std::istringstream nan("1\nnan\n");
    EXPECT_THROW(read_csv(nan, {1}), ParseError);
    std::istringstream empty("header\n");
    EXPECT_THROW(read_csv(empty, {1}), Error);
}

TEST(Csv, RoundTripIsExact) {
    Matrix m(3, 2);
    m << 0.1, -1e-300, 1.0 / 3.0, 2.5e10, -7.25, 42.0;
    const TimeSeries s(m, 0.5);
    std::stringstream buf;
    write_csv(buf, s);
    const auto back = read_csv(buf, {2, 3});
    EXPECT_EQ(back.values(), m);
}

TEST(Format, ShortestRoundTrip) {
    EXPECT_EQ(format_double(0.1), "0.1");
    EXPECT_EQ(format_double(2.0), "2");
    EXPECT_EQ(*parse_finite(" +1.25 "), 1.25);
    EXPECT_FALSE(parse_finite("1.0x"));
    EXPECT_FALSE(parse_finite("inf"));
    EXPECT_FALSE(parse_finite(""));
}
