#pragma once

// Experimenter-audible event contract of the masked protocol. Events carry
// only post-answer correctness and game-level outcomes; nothing here may
// describe stimulus values, slot positions, or which slot is correct.

#include "numerosity/error.hpp"
#include "numerosity/timestamp.hpp"
#include "numerosity/types.hpp"

#include <chrono>
#include <condition_variable>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace numerosity {

enum class FeedbackKind { TrialCorrect, TrialIncorrect, GameEnded, ExitRequested, SessionStarted };

constexpr std::string_view to_string(FeedbackKind kind) noexcept {
    switch (kind) {
        case FeedbackKind::TrialCorrect: return "TrialCorrect";
        case FeedbackKind::TrialIncorrect: return "TrialIncorrect";
        case FeedbackKind::GameEnded: return "GameEnded";
        case FeedbackKind::ExitRequested: return "ExitRequested";
        case FeedbackKind::SessionStarted: return "SessionStarted";
    }
    return "TrialCorrect";
}

/// Spoken word per event kind. Keys: correct, incorrect, high, mid, low, exit.
class Vocabulary {
public:
    static Vocabulary defaults() {
        Vocabulary v;
        v.words_ = {{"correct", "good"}, {"incorrect", "no"}, {"high", "great"},
                    {"mid", "ok"},       {"low", "again"},    {"exit", "attention"}};
        return v;
    }

    void set(const std::string& key, std::string word) { words_[key] = std::move(word); }
    void erase(const std::string& key) { words_.erase(key); }

    const std::string& word(const std::string& key) const {
        auto it = words_.find(key);
        if (it == words_.end() || it->second.empty())
            throw Error(ErrorCode::MissingVocabularyEntry, "no word for '" + key + "'");
        return it->second;
    }

    const std::map<std::string, std::string>& words() const noexcept { return words_; }

    friend bool operator==(const Vocabulary&, const Vocabulary&) = default;

private:
    std::map<std::string, std::string> words_;
};

inline std::string tier_key(Tier tier) {
    switch (tier) {
        case Tier::High: return "high";
        case Tier::Mid: return "mid";
        case Tier::Low: return "low";
    }
    return "low";
}

struct FeedbackEvent {
    FeedbackKind kind = FeedbackKind::TrialCorrect;
    std::optional<Tier> tier;         // GameEnded only
    std::optional<DisplayMode> mode;  // SessionStarted only
    std::string spoken_word;
    Timestamp timestamp{};

    friend bool operator==(const FeedbackEvent&, const FeedbackEvent&) = default;
};

inline FeedbackEvent feedback_for_answer(bool correction, const Vocabulary& vocabulary,
                                         Timestamp at = {}) {
    FeedbackEvent e;
    e.kind = correction ? FeedbackKind::TrialCorrect : FeedbackKind::TrialIncorrect;
    e.spoken_word = vocabulary.word(correction ? "correct" : "incorrect");
    e.timestamp = at;
    return e;
}

inline FeedbackEvent end_of_game_feedback(Tier tier, const Vocabulary& vocabulary,
                                          Timestamp at = {}) {
    FeedbackEvent e;
    e.kind = FeedbackKind::GameEnded;
    e.tier = tier;
    e.spoken_word = vocabulary.word(tier_key(tier));
    e.timestamp = at;
    return e;
}

inline FeedbackEvent exit_feedback(const Vocabulary& vocabulary, Timestamp at = {}) {
    FeedbackEvent e;
    e.kind = FeedbackKind::ExitRequested;
    e.spoken_word = vocabulary.word("exit");
    e.timestamp = at;
    return e;
}

/// The mode name is spoken; it reveals nothing about the correct slot.
inline FeedbackEvent session_started_feedback(DisplayMode mode, Timestamp at = {}) {
    FeedbackEvent e;
    e.kind = FeedbackKind::SessionStarted;
    e.mode = mode;
    e.spoken_word = std::string(wire_name(mode));
    e.timestamp = at;
    return e;
}

/// "GameEnded(High)", "SessionStarted(dice)", "TrialCorrect", ...
inline std::string kind_label(const FeedbackEvent& e) {
    std::string label(to_string(e.kind));
    if (e.kind == FeedbackKind::GameEnded && e.tier)
        label += "(" + std::string(to_string(*e.tier)) + ")";
    if (e.kind == FeedbackKind::SessionStarted && e.mode)
        label += "(" + std::string(wire_name(*e.mode)) + ")";
    return label;
}

/// One line: `timestamp kind word`.
inline std::string serialize(const FeedbackEvent& e) {
    return render_iso(e.timestamp) + " " + kind_label(e) + " " + e.spoken_word;
}

/// Append-only event queue: one producer, any number of readers, each
/// holding its own cursor.
class EventLog {
public:
    void append(FeedbackEvent event) {
        {
            std::lock_guard lock(mutex_);
            events_.push_back(std::move(event));
        }
        cv_.notify_all();
    }

    std::size_t size() const {
        std::lock_guard lock(mutex_);
        return events_.size();
    }

    std::vector<FeedbackEvent> read_since(std::size_t cursor) const {
        std::lock_guard lock(mutex_);
        if (cursor >= events_.size()) return {};
        return {events_.begin() + static_cast<std::ptrdiff_t>(cursor), events_.end()};
    }

    /// Blocks until an event past `cursor` exists or the timeout elapses.
    std::vector<FeedbackEvent> wait_since(std::size_t cursor,
                                          std::chrono::milliseconds timeout) const {
        std::unique_lock lock(mutex_);
        cv_.wait_for(lock, timeout, [&] { return events_.size() > cursor; });
        if (cursor >= events_.size()) return {};
        return {events_.begin() + static_cast<std::ptrdiff_t>(cursor), events_.end()};
    }

private:
    mutable std::mutex mutex_;
    mutable std::condition_variable cv_;
    std::vector<FeedbackEvent> events_;
};

} // namespace numerosity
