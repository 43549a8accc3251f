#pragma once

#include "numerosity/error.hpp"
#include "numerosity/feedback.hpp"
#include "numerosity/timestamp.hpp"
#include "numerosity/trial_log.hpp"
#include "numerosity/types.hpp"

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace numerosity {

using Rng = std::mt19937_64;

/// One stimulus presentation. values[i] is shown in slot i, left to right.
struct TrialSpec {
    DisplayMode mode = DisplayMode::Dice;
    std::vector<int> values;
    std::size_t correct_index = 0;

    friend bool operator==(const TrialSpec&, const TrialSpec&) = default;
};

/// Display settings, recorded verbatim in the log's last column.
struct Appearance {
    std::string background = "black";
    std::string foreground = "green";
    std::string background_opacity = ".2";

    friend bool operator==(const Appearance&, const Appearance&) = default;
};

struct GameConfig {
    DisplayMode mode = DisplayMode::Dice;
    ValueDomain domain;
    int set_size = 2;
    int trials_per_game = 20;
    double lower_boundary = 0.5;
    double upper_boundary = 0.8;
    long inter_trial_delay_ms = 0;
    long long_press_threshold_ms = 1000;
    Appearance appearance;
    Vocabulary vocabulary = Vocabulary::defaults();

    void validate() const {
        if (set_size < 2 || set_size > static_cast<int>(kMaxSlots))
            throw Error(ErrorCode::InvalidConfig, "set size must be within [2,5]");
        if (static_cast<std::size_t>(set_size) > domain.size())
            throw Error(ErrorCode::InvalidConfig, "set size exceeds the value domain");
        if (trials_per_game < 1)
            throw Error(ErrorCode::InvalidConfig, "a game needs at least one trial");
        if (!(0.0 <= lower_boundary && lower_boundary <= upper_boundary && upper_boundary <= 1.0))
            throw Error(ErrorCode::InvalidConfig, "score boundaries must satisfy 0<=b1<=b2<=1");
        if (inter_trial_delay_ms < 0)
            throw Error(ErrorCode::InvalidConfig, "inter-trial delay must be non-negative");
        if (long_press_threshold_ms <= 0)
            throw Error(ErrorCode::InvalidConfig, "long-press threshold must be positive");
        for (const char* key : {"correct", "incorrect", "high", "mid", "low", "exit"})
            (void)vocabulary.word(key);
    }

    /// "background black, foreground green, bg opacity .2, Value Set [1,2,3,4,5]"
    std::string other_parameters() const {
        return "background " + appearance.background + ", foreground " + appearance.foreground +
               ", bg opacity " + appearance.background_opacity + ", Value Set " +
               domain.to_string();
    }

    friend bool operator==(const GameConfig&, const GameConfig&) = default;
};

/// Draws an ordered tuple of set_size distinct domain values uniformly among
/// all such tuples (partial Fisher-Yates), so the position of the maximum is
/// uniform over slots.
inline TrialSpec generate_trial(const GameConfig& config, Rng& rng) {
    if (config.set_size < 2 || config.set_size > static_cast<int>(kMaxSlots))
        throw Error(ErrorCode::InvalidConfig, "set size must be within [2,5]");
    const auto k = static_cast<std::size_t>(config.set_size);
    std::vector<int> pool = config.domain.values();
    if (k > pool.size()) throw Error(ErrorCode::InvalidConfig, "set size exceeds the value domain");
    for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
        std::swap(pool[i], pool[pick(rng)]);
    }
    pool.resize(k);
    TrialSpec spec;
    spec.mode = config.mode;
    spec.correct_index =
        static_cast<std::size_t>(std::max_element(pool.begin(), pool.end()) - pool.begin());
    spec.values = std::move(pool);
    return spec;
}

struct AnswerOutcome {
    int chosen_value = 0;
    bool correction = false;
    long answering_time_ms = 0;
};

/// Answering time runs from stimulus display, so inter-trial delays never count.
inline AnswerOutcome evaluate_answer(const TrialSpec& trial, std::size_t chosen_slot,
                                     Timestamp display_time, Timestamp answer_time) {
    if (chosen_slot >= trial.values.size())
        throw Error(ErrorCode::SlotOutOfRange, "slot " + std::to_string(chosen_slot) +
                                                   " outside a " +
                                                   std::to_string(trial.values.size()) +
                                                   "-value trial");
    if (answer_time < display_time)
        throw Error(ErrorCode::InvalidTiming, "answer precedes stimulus display");
    return {trial.values[chosen_slot], chosen_slot == trial.correct_index,
            static_cast<long>((answer_time - display_time).count())};
}

/// Lower-inclusive tiers: High iff score >= b2, Mid iff b1 <= score < b2.
inline Tier end_of_game_tier(int correct, int total, double lower, double upper) {
    if (total < 1 || correct < 0 || correct > total)
        throw Error(ErrorCode::DomainError, "need 0 <= correct <= total and total >= 1");
    // Compare correct >= b*total rather than correct/total >= b so that exact
    // boundaries such as 10/20 vs 0.5 are not lost to rounding.
    const double c = correct;
    const double t = total;
    if (c >= upper * t) return Tier::High;
    if (c >= lower * t) return Tier::Mid;
    return Tier::Low;
}

// ---------------------------------------------------------------------------
// Session state machine

enum class Phase { Menu, InGame, Settings, Ended };

constexpr std::string_view to_string(Phase phase) noexcept {
    switch (phase) {
        case Phase::Menu: return "Menu";
        case Phase::InGame: return "InGame";
        case Phase::Settings: return "Settings";
        case Phase::Ended: return "Ended";
    }
    return "Menu";
}

namespace input {
struct SelectMode { DisplayMode mode; };
struct TouchSlot { std::size_t slot; };
struct ExitButton {};
struct LongPress { long duration_ms; };
struct ContinuePlaying {};
struct ApplySettings { GameConfig config; };
} // namespace input

using UserInput = std::variant<input::SelectMode, input::TouchSlot, input::ExitButton,
                               input::LongPress, input::ContinuePlaying, input::ApplySettings>;

struct PendingTrial {
    TrialSpec spec;
    Timestamp displayed_at{};

    friend bool operator==(const PendingTrial&, const PendingTrial&) = default;
};

struct SessionState {
    Phase phase = Phase::Menu;
    GameConfig config;
    std::string learner = "Subject";
    std::string trainer = "Experimenter";
    int trial_in_game = 0;
    int correct_in_game = 0;
    long last_test_no = 0;
    int games_completed = 0;
    std::optional<Tier> last_tier;
    std::optional<PendingTrial> pending;

    friend bool operator==(const SessionState&, const SessionState&) = default;
};

struct StepOutcome {
    SessionState state;
    std::vector<FeedbackEvent> events;
    std::optional<TrialRecord> record;
};

namespace detail {

[[noreturn]] inline void illegal(Phase phase, std::string_view what) {
    throw Error(ErrorCode::IllegalTransition,
                std::string(what) + " is not accepted in phase " + std::string(to_string(phase)));
}

inline void start_game(SessionState& s, Timestamp now, Rng& rng) {
    s.phase = Phase::InGame;
    s.trial_in_game = 0;
    s.correct_in_game = 0;
    s.pending = PendingTrial{generate_trial(s.config, rng), now};
}

} // namespace detail

/// Advances the state machine by one input. The input state is never
/// modified; on error nothing is emitted and the caller keeps its state.
inline StepOutcome session_step(const SessionState& state, const UserInput& in, Timestamp now,
                                Rng& rng) {
    StepOutcome out{state, {}, std::nullopt};
    SessionState& s = out.state;
    const Phase phase = state.phase;

    std::visit(
        [&](const auto& ev) {
            using T = std::decay_t<decltype(ev)>;
            if constexpr (std::is_same_v<T, input::SelectMode>) {
                if (phase != Phase::Menu && phase != Phase::Ended) detail::illegal(phase, "SelectMode");
                s.config.mode = ev.mode;
                out.events.push_back(session_started_feedback(ev.mode, now));
                detail::start_game(s, now, rng);
            } else if constexpr (std::is_same_v<T, input::TouchSlot>) {
                if (phase != Phase::InGame || !s.pending) detail::illegal(phase, "TouchSlot");
                const PendingTrial pending = *s.pending;
                const AnswerOutcome answer =
                    evaluate_answer(pending.spec, ev.slot, pending.displayed_at, now);

                TrialRecord r;
                r.test_no = s.last_test_no + 1;
                r.test_name = pending.spec.mode;
                r.learner = s.learner;
                r.trainer = s.trainer;
                for (std::size_t i = 0; i < pending.spec.values.size(); ++i)
                    r.c[i] = pending.spec.values[i];
                r.value_selected = answer.chosen_value;
                r.correction = answer.correction;
                r.date = now;
                r.answering_time_ms = answer.answering_time_ms;
                r.other_parameters = s.config.other_parameters();

                out.events.push_back(feedback_for_answer(answer.correction, s.config.vocabulary, now));
                s.last_test_no = r.test_no;
                ++s.trial_in_game;
                if (answer.correction) ++s.correct_in_game;
                out.record = std::move(r);

                if (s.trial_in_game >= s.config.trials_per_game) {
                    const Tier tier = end_of_game_tier(s.correct_in_game, s.trial_in_game,
                                                       s.config.lower_boundary,
                                                       s.config.upper_boundary);
                    out.events.push_back(end_of_game_feedback(tier, s.config.vocabulary, now));
                    s.last_tier = tier;
                    ++s.games_completed;
                    s.pending.reset();
                    s.phase = Phase::Ended;
                } else {
                    s.pending = PendingTrial{
                        generate_trial(s.config, rng),
                        now + std::chrono::milliseconds{s.config.inter_trial_delay_ms}};
                }
            } else if constexpr (std::is_same_v<T, input::ExitButton>) {
                if (phase == Phase::Settings) {
                    s.phase = Phase::Menu;
                    return;
                }
                if (phase != Phase::InGame && phase != Phase::Ended) detail::illegal(phase, "ExitButton");
                out.events.push_back(exit_feedback(s.config.vocabulary, now));
                s.pending.reset();
                s.phase = Phase::Menu;
            } else if constexpr (std::is_same_v<T, input::LongPress>) {
                if (phase != Phase::Menu && phase != Phase::Ended) detail::illegal(phase, "LongPress");
                if (ev.duration_ms >= s.config.long_press_threshold_ms) s.phase = Phase::Settings;
            } else if constexpr (std::is_same_v<T, input::ContinuePlaying>) {
                if (phase != Phase::Ended) detail::illegal(phase, "ContinuePlaying");
                detail::start_game(s, now, rng);
            } else if constexpr (std::is_same_v<T, input::ApplySettings>) {
                if (phase != Phase::Settings) detail::illegal(phase, "ApplySettings");
                ev.config.validate();
                s.config = ev.config;
            }
        },
        in);
    return out;
}

struct SessionInfo {
    std::string learner = "Subject";
    std::string trainer = "Experimenter";
    std::uint64_t seed = 0;
};

inline std::uint64_t entropy_seed() {
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

/// Single-writer session: owns the state, the RNG, the event queue and the
/// answered records. Not safe for concurrent step() calls; the event log may
/// be read from other threads.
class Session {
public:
    Session(GameConfig config, SessionInfo info) : info_(std::move(info)), rng_(info_.seed) {
        config.validate();
        state_.config = std::move(config);
        state_.learner = info_.learner;
        state_.trainer = info_.trainer;
        TrialRecord probe;
        probe.learner = info_.learner;
        probe.trainer = info_.trainer;
        probe.c[0] = 1;
        probe.c[1] = 2;
        if (auto problem = structural_problem(probe); !problem.empty())
            throw Error(ErrorCode::InvalidConfig, problem);
    }

    StepOutcome step(const UserInput& in, Timestamp now) {
        StepOutcome out = session_step(state_, in, now, rng_);
        state_ = out.state;
        for (const auto& e : out.events) events_.append(e);
        if (out.record) records_.push_back(*out.record);
        return out;
    }

    const SessionState& snapshot() const noexcept { return state_; }
    const SessionInfo& info() const noexcept { return info_; }
    std::uint64_t seed() const noexcept { return info_.seed; }

    /// Events not yet returned by a previous drain.
    std::vector<FeedbackEvent> drain_events() {
        auto fresh = events_.read_since(drained_);
        drained_ += fresh.size();
        return fresh;
    }

    const EventLog& events() const noexcept { return events_; }
    const std::vector<TrialRecord>& records() const noexcept { return records_; }
    std::string log_csv() const { return format_log_csv(records_); }
    std::string log_txt() const { return format_log_txt(records_); }

private:
    SessionInfo info_;
    Rng rng_;
    SessionState state_;
    EventLog events_;
    std::size_t drained_ = 0;
    std::vector<TrialRecord> records_;
};

} // namespace numerosity
