#pragma once

// Synthetic subjects. Models are stationary: the probability of a correct
// answer depends only on the trial shown, never on history.

#include "numerosity/binomial.hpp"
#include "numerosity/error.hpp"
#include "numerosity/trial_engine.hpp"
#include "numerosity/trial_log.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace numerosity {

namespace model {

struct UniformRandom {};

struct Perfect {};

/// Probability of a correct answer per unordered pair {smaller, larger}.
struct RatioTable {
    std::map<std::pair<int, int>, double> accuracy;

    /// Per-pair accuracies of the first subject over {1..5}.
    static RatioTable subject_one() {
        return from_rows({{{1, 2}, 0.81}, {{1, 3}, 0.90}, {{1, 4}, 0.93}, {{1, 5}, 0.94},
                          {{2, 3}, 0.82}, {{2, 4}, 0.81}, {{2, 5}, 0.96}, {{3, 4}, 0.67},
                          {{3, 5}, 0.73}, {{4, 5}, 0.55}});
    }
    /// Per-pair accuracies of the second subject over {1..5}.
    static RatioTable subject_two() {
        return from_rows({{{1, 2}, 0.69}, {{1, 3}, 0.70}, {{1, 4}, 0.78}, {{1, 5}, 0.94},
                          {{2, 3}, 0.57}, {{2, 4}, 0.68}, {{2, 5}, 0.76}, {{3, 4}, 0.45},
                          {{3, 5}, 0.70}, {{4, 5}, 0.71}});
    }
    static RatioTable from_rows(std::vector<std::pair<std::pair<int, int>, double>> rows) {
        RatioTable t;
        for (auto& [pair, acc] : rows) t.accuracy[pair] = acc;
        return t;
    }
};

/// P(correct) = 1 / (1 + exp(-(intercept + slope * ratio))).
struct RatioLogistic {
    double slope = -6.0;
    double intercept = 6.0;
};

} // namespace model

using SubjectModel =
    std::variant<model::UniformRandom, model::Perfect, model::RatioTable, model::RatioLogistic>;

inline std::string model_name(const SubjectModel& m) {
    switch (m.index()) {
        case 0: return "uniform";
        case 1: return "perfect";
        case 2: return "ratio-table";
        default: return "ratio-logistic";
    }
}

/// The pair a ratio model keys on: the two largest values of the trial.
/// For 3- and 4-value trials this is a modelling choice.
inline std::pair<int, int> top_two(const TrialSpec& trial) {
    std::vector<int> v = trial.values;
    std::sort(v.begin(), v.end());
    return {v[v.size() - 2], v.back()};
}

/// Checks probabilities are in [0,1] and a table covers every domain pair.
inline void validate_model(const SubjectModel& m, const ValueDomain& domain) {
    if (const auto* table = std::get_if<model::RatioTable>(&m)) {
        for (const auto& [pair, acc] : table->accuracy)
            if (!(acc >= 0.0 && acc <= 1.0))
                throw Error(ErrorCode::InvalidConfig, "accuracy outside [0,1]");
        const auto& v = domain.values();
        for (std::size_t i = 0; i < v.size(); ++i)
            for (std::size_t j = i + 1; j < v.size(); ++j)
                if (!table->accuracy.count({v[i], v[j]}))
                    throw Error(ErrorCode::MissingPairEntry,
                                "no accuracy for {" + std::to_string(v[i]) + "," +
                                    std::to_string(v[j]) + "}");
    }
}

/// Probability that the model answers `trial` correctly.
inline double correct_probability(const SubjectModel& m, const TrialSpec& trial) {
    return std::visit(
        [&](const auto& mdl) -> double {
            using T = std::decay_t<decltype(mdl)>;
            if constexpr (std::is_same_v<T, model::UniformRandom>) {
                return 1.0 / static_cast<double>(trial.values.size());
            } else if constexpr (std::is_same_v<T, model::Perfect>) {
                return 1.0;
            } else if constexpr (std::is_same_v<T, model::RatioTable>) {
                const auto pair = top_two(trial);
                auto it = mdl.accuracy.find(pair);
                if (it == mdl.accuracy.end())
                    throw Error(ErrorCode::MissingPairEntry,
                                "no accuracy for {" + std::to_string(pair.first) + "," +
                                    std::to_string(pair.second) + "}");
                return it->second;
            } else {
                const auto [second, largest] = top_two(trial);
                const double ratio = static_cast<double>(second) / largest;
                return 1.0 / (1.0 + std::exp(-(mdl.intercept + mdl.slope * ratio)));
            }
        },
        m);
}

/// Slot the simulated subject touches. Wrong answers are uniform over the
/// non-correct slots.
inline std::size_t choose(const SubjectModel& m, const TrialSpec& trial, Rng& rng) {
    const std::size_t slots = trial.values.size();
    if (std::holds_alternative<model::UniformRandom>(m)) {
        std::uniform_int_distribution<std::size_t> any(0, slots - 1);
        return any(rng);
    }
    if (std::holds_alternative<model::Perfect>(m)) return trial.correct_index;
    std::bernoulli_distribution hit(correct_probability(m, trial));
    if (hit(rng)) return trial.correct_index;
    std::uniform_int_distribution<std::size_t> wrong(0, slots - 2);
    const std::size_t w = wrong(rng);
    return w >= trial.correct_index ? w + 1 : w;
}

struct SimulationOptions {
    std::uint64_t seed = 1;
    std::string learner = "Subject";
    std::string trainer = "Experimenter";
    Timestamp start = make_timestamp({2022, 5, 19, 17, 2, 0, 0});
    double median_answer_ms = 3000.0;
    double answer_sigma = 0.6;
    long pause_between_games_ms = 5000;
    /// Rotate dice -> heap -> rect -> disc across games instead of replaying one mode.
    bool cycle_modes = false;
    LogFormat format = LogFormat::Csv;
};

struct SimulationResult {
    std::string log;
    std::vector<TrialRecord> records;
    std::vector<FeedbackEvent> events;
    std::vector<Tier> tiers;
    std::map<std::string, std::string> metadata;
};

/// Called after every step with the state before it and the outcome.
using StepObserver = std::function<void(const SessionState& before, const StepOutcome& outcome)>;

/// Plays `games` full games through the session state machine and returns
/// the resulting log. Timestamps are synthetic and strictly increasing.
inline SimulationResult simulate_session(const SubjectModel& subject, GameConfig config, int games,
                                         const SimulationOptions& options = {},
                                         const StepObserver& observer = {}) {
    if (games < 1) throw Error(ErrorCode::InvalidConfig, "need at least one game");
    config.validate();
    validate_model(subject, config.domain);

    Session session(config, {options.learner, options.trainer, options.seed});
    std::seed_seq behaviour_seed{options.seed, std::uint64_t{0x5eed}};
    Rng behaviour(behaviour_seed);
    std::lognormal_distribution<double> answer_time(std::log(options.median_answer_ms),
                                                    options.answer_sigma);

    SimulationResult result;
    Timestamp now = options.start;
    auto step = [&](const UserInput& in) {
        const SessionState before = session.snapshot();
        StepOutcome out = session.step(in, now);
        if (observer) observer(before, out);
        for (const auto& e : out.events) {
            if (e.kind == FeedbackKind::GameEnded) result.tiers.push_back(*e.tier);
        }
    };

    std::size_t mode_index = static_cast<std::size_t>(
        std::find(kAllModes.begin(), kAllModes.end(), config.mode) - kAllModes.begin());
    step(input::SelectMode{config.mode});
    for (int g = 0; g < games; ++g) {
        if (g > 0) {
            now += std::chrono::milliseconds{options.pause_between_games_ms};
            if (options.cycle_modes) {
                mode_index = (mode_index + 1) % kAllModes.size();
                step(input::SelectMode{kAllModes[mode_index]});
            } else {
                step(input::ContinuePlaying{});
            }
        }
        while (session.snapshot().phase == Phase::InGame) {
            const PendingTrial& pending = *session.snapshot().pending;
            const auto delay = std::max<long>(1, std::lround(answer_time(behaviour)));
            now = pending.displayed_at + std::chrono::milliseconds{delay};
            step(input::TouchSlot{choose(subject, pending.spec, behaviour)});
        }
    }
    step(input::ExitButton{});

    result.records = session.records();
    result.events = session.events().read_since(0);
    result.log = format_log(result.records, options.format);
    result.metadata = {{"model", model_name(subject)},
                       {"seed", std::to_string(options.seed)},
                       {"games", std::to_string(games)},
                       {"trials_per_game", std::to_string(config.trials_per_game)},
                       {"set_size", std::to_string(config.set_size)},
                       {"median_answer_ms", std::to_string(options.median_answer_ms)}};
    if (config.set_size > 2 && (std::holds_alternative<model::RatioTable>(subject) ||
                                std::holds_alternative<model::RatioLogistic>(subject)))
        result.metadata["modelling_note"] =
            "ratio model applied to the two largest values of each trial";
    return result;
}

/// Binomial p-value of one simulated block of `n_trials` trials.
inline double simulate_p_value(const SubjectModel& subject, const GameConfig& config,
                               std::int64_t n_trials, Rng& rng, bool exact_chance = false) {
    std::int64_t k = 0;
    const Timestamp t{};
    for (std::int64_t i = 0; i < n_trials; ++i) {
        const TrialSpec trial = generate_trial(config, rng);
        if (evaluate_answer(trial, choose(subject, trial, rng), t, t).correction) ++k;
    }
    return binomial_tail(k, n_trials, chance_level(config.set_size, exact_chance));
}

/// Replicate r of grid point n gets its own stream, so replicates are
/// independent and can run in any order.
inline Rng replicate_rng(std::uint64_t seed, std::int64_t n, std::size_t replicate) {
    std::seed_seq seq{seed, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(replicate)};
    return Rng(seq);
}

inline std::vector<double> simulate_p_values(const SubjectModel& subject, const GameConfig& config,
                                             std::int64_t n_trials, std::size_t replicates,
                                             std::uint64_t seed, bool exact_chance = false) {
    config.validate();
    validate_model(subject, config.domain);
    std::vector<double> out;
    out.reserve(replicates);
    for (std::size_t r = 0; r < replicates; ++r) {
        Rng rng = replicate_rng(seed, n_trials, r);
        out.push_back(simulate_p_value(subject, config, n_trials, rng, exact_chance));
    }
    return out;
}

struct PowerPoint {
    std::int64_t n_trials = 0;
    std::size_t replicates = 0;
    std::size_t detections = 0;
    double rate = 0.0;
};

/// Fraction of simulated sessions whose binomial p-value falls below alpha.
inline std::vector<PowerPoint> power_analysis(const SubjectModel& subject, const GameConfig& config,
                                              const std::vector<std::int64_t>& grid, double alpha,
                                              std::size_t replicates, std::uint64_t seed,
                                              bool exact_chance = false) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::DomainError, "alpha must lie in (0,1)");
    if (replicates == 0) throw Error(ErrorCode::DomainError, "need at least one replicate");
    std::vector<PowerPoint> out;
    for (std::int64_t n : grid) {
        if (n < 1) throw Error(ErrorCode::DomainError, "grid sizes must be positive");
        PowerPoint point{n, replicates, 0, 0.0};
        for (double p : simulate_p_values(subject, config, n, replicates, seed, exact_chance))
            if (p < alpha) ++point.detections;
        point.rate = static_cast<double>(point.detections) / static_cast<double>(replicates);
        out.push_back(point);
    }
    return out;
}

} // namespace numerosity
