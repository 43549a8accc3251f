#include "numerosity/simulator.hpp"
#include "numerosity/stats.hpp"
#include "numerosity/uniformity.hpp"

#include <gtest/gtest.h>

using namespace numerosity;

namespace {

double accuracy_on_pair(const SubjectModel& m, std::vector<int> values, int n, std::uint64_t seed) {
    Rng rng(seed);
    const TrialSpec t{DisplayMode::Dice, values,
                      static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin())};
    int hits = 0;
    for (int i = 0; i < n; ++i) hits += choose(m, t, rng) == t.correct_index ? 1 : 0;
    return static_cast<double>(hits) / n;
}

} // namespace

TEST(Choose, PerfectAndUniform) {
    Rng rng(1);
    const TrialSpec t{DisplayMode::Dice, {1, 4}, 1};
    EXPECT_EQ(choose(model::Perfect{}, t, rng), 1u);

    GameConfig c;
    int hits = 0;
    for (int i = 0; i < 100000; ++i) {
        const TrialSpec trial = generate_trial(c, rng);
        hits += choose(model::UniformRandom{}, trial, rng) == trial.correct_index ? 1 : 0;
    }
    EXPECT_NEAR(hits / 100000.0, 0.5, 0.01);
}

TEST(Choose, RatioTableMatchesAccuracy) {
    const SubjectModel one = model::RatioTable::subject_one();
    EXPECT_NEAR(accuracy_on_pair(one, {4, 5}, 100000, 2), 0.55, 0.01);
    EXPECT_NEAR(accuracy_on_pair(one, {5, 4}, 100000, 3), 0.55, 0.01);
    EXPECT_NEAR(accuracy_on_pair(one, {2, 5}, 100000, 4), 0.96, 0.01);
}

TEST(Choose, WrongAnswersSpreadOverOtherSlots) {
    const SubjectModel m = model::RatioTable::from_rows({{{4, 5}, 0.0}});
    const TrialSpec t{DisplayMode::Dice, {1, 5, 4}, 1};
    Rng rng(9);
    std::array<std::size_t, 3> counts{};
    for (int i = 0; i < 30000; ++i) ++counts[choose(m, t, rng)];
    EXPECT_EQ(counts[1], 0u);
    EXPECT_NEAR(static_cast<double>(counts[0]) / 30000, 0.5, 0.02);
}

TEST(Choose, LogisticFollowsRatio) {
    const SubjectModel m = model::RatioLogistic{-6.0, 6.0};
    const TrialSpec close{DisplayMode::Dice, {4, 5}, 1};
    const TrialSpec far{DisplayMode::Dice, {1, 5}, 1};
    EXPECT_NEAR(correct_probability(m, close), 1.0 / (1.0 + std::exp(-(6.0 - 6.0 * 0.8))), 1e-12);
    EXPECT_GT(correct_probability(m, far), correct_probability(m, close));
}

TEST(Model, Validation) {
    GameConfig c;
    c.domain = ValueDomain::range(6);
    try {
        simulate_session(model::RatioTable::subject_one(), c, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MissingPairEntry);
    }
    EXPECT_THROW(validate_model(model::RatioTable::from_rows({{{1, 2}, 1.5}}), ValueDomain{1, 2}), Error);
}

TEST(SimulateSession, PerfectGameIsHigh) {
    const auto result = simulate_session(model::Perfect{}, GameConfig{}, 1);
    ASSERT_EQ(result.records.size(), 20u);
    for (const auto& r : result.records) EXPECT_TRUE(r.correction);
    ASSERT_EQ(result.tiers.size(), 1u);
    EXPECT_EQ(result.tiers[0], Tier::High);
}

TEST(SimulateSession, LogParsesAndTimesIncrease) {
    SimulationOptions options;
    options.seed = 17;
    options.cycle_modes = true;
    const auto result = simulate_session(model::RatioTable::subject_two(), GameConfig{}, 6, options);
    const ParsedLog log = parse_log(result.log);
    EXPECT_TRUE(log.warnings.empty());
    EXPECT_EQ(log.records, result.records);
    ASSERT_EQ(log.records.size(), 120u);
    for (std::size_t i = 1; i < log.records.size(); ++i) {
        EXPECT_EQ(log.records[i].test_no, log.records[i - 1].test_no + 1);
        EXPECT_GT(log.records[i].date, log.records[i - 1].date);
    }
    EXPECT_EQ(log.records[0].test_name, DisplayMode::Dice);
    EXPECT_EQ(log.records[20].test_name, DisplayMode::Heap);
    EXPECT_EQ(log.records[40].test_name, DisplayMode::Rect);
    EXPECT_EQ(log.records[60].test_name, DisplayMode::Disc);
    EXPECT_EQ(log.records[80].test_name, DisplayMode::Dice);
    EXPECT_EQ(result.metadata.at("seed"), "17");

    options.format = LogFormat::Txt;
    const auto txt = simulate_session(model::RatioTable::subject_two(), GameConfig{}, 6, options);
    EXPECT_EQ(parse_log(txt.log, LogFormat::Txt).records, result.records);
}

TEST(SimulateSession, RatioTableAccuracyNearExpectation) {
    // Pairs are uniform, so the expected accuracy is the table mean.
    const auto table = model::RatioTable::subject_one();
    double expected = 0.0;
    for (const auto& [_, acc] : table.accuracy) expected += acc / 10.0;
    GameConfig c;
    c.trials_per_game = 1214;
    const auto result = simulate_session(table, c, 1, SimulationOptions{5});
    std::vector<const TrialRecord*> records;
    for (const auto& r : result.records) records.push_back(&r);
    const Cell cell = compute_cell(records);
    EXPECT_EQ(cell.n, 1214u);
    EXPECT_NEAR(cell.accuracy, expected, 0.03);
}

TEST(SimulateSession, ModellingNoteForLargerSets) {
    GameConfig c;
    c.set_size = 3;
    c.trials_per_game = 5;
    EXPECT_TRUE(simulate_session(model::RatioLogistic{}, c, 1).metadata.count("modelling_note"));
    EXPECT_FALSE(simulate_session(model::UniformRandom{}, c, 1).metadata.count("modelling_note"));
    c.set_size = 2;
    EXPECT_FALSE(simulate_session(model::RatioLogistic{}, c, 1).metadata.count("modelling_note"));
}

TEST(Power, NullCalibration) {
    const auto points = power_analysis(model::UniformRandom{}, GameConfig{}, {100, 200}, 0.05, 2000, 11);
    for (const auto& p : points) {
        EXPECT_EQ(p.replicates, 2000u);
        EXPECT_NEAR(p.rate, 0.05, 0.02) << p.n_trials;
    }
}

TEST(Power, PerfectAlwaysDetects) {
    const auto points = power_analysis(model::Perfect{}, GameConfig{}, {30}, 0.05, 200, 1);
    EXPECT_EQ(points[0].rate, 1.0);
    EXPECT_LT(simulate_p_values(model::Perfect{}, GameConfig{}, 100, 1, 1)[0], 1e-25);
}

TEST(Power, RatioTableSubjectOne) {
    const auto points = power_analysis(model::RatioTable::subject_one(), GameConfig{}, {100}, 0.05, 1000, 2022);
    EXPECT_GT(points[0].rate, 0.99);
    EXPECT_THROW(power_analysis(model::Perfect{}, GameConfig{}, {10}, 1.5, 10, 1), Error);
    EXPECT_THROW(power_analysis(model::Perfect{}, GameConfig{}, {0}, 0.05, 10, 1), Error);
}

TEST(Power, ReplicatesAreReproducible) {
    EXPECT_EQ(simulate_p_values(model::UniformRandom{}, GameConfig{}, 50, 20, 8),
              simulate_p_values(model::UniformRandom{}, GameConfig{}, 50, 20, 8));
}

TEST(Power, NullPValuesAreUniform) {
    // Large blocks keep the binomial p-value distribution close to continuous.
    const auto ps = simulate_p_values(model::UniformRandom{}, GameConfig{}, 10000, 1000, 31337);
    EXPECT_GT(ks_uniform(ps).p_value, 0.01);
}
