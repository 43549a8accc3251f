#pragma once

// Shared test fixtures: data files, an exact binomial oracle and synthetic
// corpora with known per-mode counts.

#include "numerosity/trial_engine.hpp"
#include "numerosity/trial_log.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fixtures {

using namespace numerosity;

inline std::string data_path(const std::string& name) { return std::string(NUMEROSITY_TEST_DATA) + "/" + name; }

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string read_data(const std::string& name) { return read_file(data_path(name)); }

/// P[X >= k] for X ~ Binomial(n, num/den), summed in exact integers:
/// sum_j C(n,j) num^j (den-num)^(n-j) / den^n.
inline double exact_binomial_tail(long k, long n, long num, long den) {
    using boost::multiprecision::cpp_int;
    using Float = boost::multiprecision::cpp_bin_float_100;
    cpp_int total = 0;
    cpp_int choose = 1;  // C(n, j)
    for (long j = 0; j <= n; ++j) {
        if (j > 0) choose = choose * (n - j + 1) / j;
        if (j >= k) total += choose * boost::multiprecision::pow(cpp_int(num), static_cast<unsigned>(j)) *
                             boost::multiprecision::pow(cpp_int(den - num), static_cast<unsigned>(n - j));
    }
    const cpp_int denominator = boost::multiprecision::pow(cpp_int(den), static_cast<unsigned>(n));
    return static_cast<double>(Float(total) / Float(denominator));
}

inline TrialRecord make_record(long test_no, DisplayMode mode, std::vector<int> values, int chosen,
                               Timestamp date, long answering_ms = 2500) {
    TrialRecord r;
    r.test_no = test_no;
    r.test_name = mode;
    r.learner = "Subject";
    r.trainer = "Experimenter";
    for (std::size_t i = 0; i < values.size(); ++i) r.c[i] = values[i];
    r.value_selected = chosen;
    r.correction = chosen == *std::max_element(values.begin(), values.end());
    r.date = date;
    r.answering_time_ms = answering_ms;
    r.other_parameters = GameConfig{}.other_parameters();
    return r;
}

struct ModeCount {
    DisplayMode mode;
    int n;
    int k;
};

/// Splits trials with the given per-mode counts over `logs` session logs,
/// one session per (day, hour), and renders each as CSV.
inline std::vector<std::string> corpus(const std::vector<ModeCount>& counts, int logs, int first_day,
                                       std::uint64_t seed) {
    struct Outcome {
        DisplayMode mode;
        bool correct;
    };
    std::vector<Outcome> outcomes;
    for (const auto& c : counts)
        for (int i = 0; i < c.n; ++i) outcomes.push_back({c.mode, i < c.k});
    Rng rng(seed);
    std::shuffle(outcomes.begin(), outcomes.end(), rng);

    std::vector<std::string> out;
    const std::size_t per_log = (outcomes.size() + static_cast<std::size_t>(logs) - 1) / static_cast<std::size_t>(logs);
    for (int l = 0; l < logs; ++l) {
        const std::size_t begin = static_cast<std::size_t>(l) * per_log;
        const std::size_t end = std::min(outcomes.size(), begin + per_log);
        Timestamp t = make_timestamp({2022, 5, static_cast<unsigned>(first_day + l), 9 + l % 8, 2, 0, 0});
        std::vector<TrialRecord> records;
        for (std::size_t i = begin; i < end; ++i) {
            GameConfig config;
            config.mode = outcomes[i].mode;
            const TrialSpec trial = generate_trial(config, rng);
            const int largest = *std::max_element(trial.values.begin(), trial.values.end());
            const int smallest = *std::min_element(trial.values.begin(), trial.values.end());
            t += std::chrono::milliseconds{2500};
            records.push_back(make_record(static_cast<long>(records.size() + 1), trial.mode, trial.values,
                                          outcomes[i].correct ? largest : smallest, t));
        }
        out.push_back(format_log_csv(records));
    }
    return out;
}

/// First subject, set size 2: dice 449/331, heap 400/340, rect 262/233,
/// disc 103/89, which totals 993 correct out of 1214, over 14 sessions.
inline std::vector<std::string> subject_one_corpus() {
    return corpus({{DisplayMode::Dice, 449, 331},
                   {DisplayMode::Heap, 400, 340},
                   {DisplayMode::Rect, 262, 233},
                   {DisplayMode::Disc, 103, 89}},
                  14, 5, 2022);
}

/// Second subject, set size 2: 303 correct out of 409 over 5 sessions.
inline std::vector<std::string> subject_two_corpus() {
    return corpus({{DisplayMode::Dice, 120, 90},
                   {DisplayMode::Heap, 110, 80},
                   {DisplayMode::Rect, 100, 75},
                   {DisplayMode::Disc, 79, 58}},
                  5, 20, 409);
}

} // namespace fixtures
