#include "numerosity/timestamp.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace numerosity;

TEST(Timestamp, RendersFigureSamples) {
    EXPECT_EQ(render_log_date(make_timestamp({2022, 5, 19, 17, 2, 25, 981})), "[2022-05-19 17:02(25.981)]");
    EXPECT_EQ(render_log_date(make_timestamp({2022, 5, 19, 17, 2, 30, 820})), "[2022-05-19 17:02(30.82)]");
    EXPECT_EQ(render_log_date(make_timestamp({2022, 5, 19, 17, 35, 6, 600})), "[2022-05-19 17:35(06.6)]");
}

TEST(Timestamp, ZeroMillisecondsKeepOneDigit) {
    EXPECT_EQ(render_log_date(make_timestamp({2022, 5, 19, 17, 35, 6, 0})), "[2022-05-19 17:35(06.0)]");
    EXPECT_EQ(render_milliseconds(0), "0");
    EXPECT_EQ(render_milliseconds(5), "005");
    EXPECT_EQ(render_milliseconds(50), "05");
}

TEST(Timestamp, ParsePadsFraction) {
    EXPECT_EQ(parse_log_date("[2022-05-19 17:35(06.6)]"), make_timestamp({2022, 5, 19, 17, 35, 6, 600}));
    EXPECT_EQ(parse_log_date("[2022-05-19 17:02(30.82)]"), make_timestamp({2022, 5, 19, 17, 2, 30, 820}));
    EXPECT_EQ(parse_log_date("[2022-05-19 17:02(30.005)]"), make_timestamp({2022, 5, 19, 17, 2, 30, 5}));
}

TEST(Timestamp, RejectsMalformed) {
    EXPECT_FALSE(parse_log_date(""));
    EXPECT_FALSE(parse_log_date("[2022-05-19 17:02(30.)]"));
    EXPECT_FALSE(parse_log_date("[2022-05-19 17:02(30.1234)]"));
    EXPECT_FALSE(parse_log_date("[2022-02-30 17:02(30.1)]"));
    EXPECT_FALSE(parse_log_date("2022-05-19 17:02(30.1)"));
    EXPECT_FALSE(parse_log_date("[2022-05-19 25:02(30.1)]"));
}

TEST(Timestamp, RoundTripsEveryMillisecond) {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<long long> offset(0, 20LL * 365 * 24 * 3600 * 1000);
    const Timestamp base = make_timestamp({2015, 1, 1, 0, 0, 0, 0});
    for (int i = 0; i < 20000; ++i) {
        const Timestamp t = base + std::chrono::milliseconds{offset(rng)};
        const std::string rendered = render_log_date(t);
        const auto parsed = parse_log_date(rendered);
        ASSERT_TRUE(parsed) << rendered;
        EXPECT_EQ(*parsed, t);
        EXPECT_EQ(render_log_date(*parsed), rendered);
        EXPECT_EQ(parse_iso(render_iso(t)), t);
    }
}

TEST(Timestamp, IsoForms) {
    EXPECT_EQ(parse_iso("2022-05-19"), make_timestamp({2022, 5, 19, 0, 0, 0, 0}));
    EXPECT_EQ(parse_iso("2022-05-19T17:02:25"), make_timestamp({2022, 5, 19, 17, 2, 25, 0}));
    EXPECT_EQ(parse_iso("2022-05-19 17:02:25.981"), make_timestamp({2022, 5, 19, 17, 2, 25, 981}));
    EXPECT_EQ(render_iso(make_timestamp({2022, 5, 19, 17, 2, 25, 981})), "2022-05-19T17:02:25.981");
    EXPECT_FALSE(parse_iso("19/05/2022"));
}
