#pragma once

#include "numerosity/error.hpp"

#include <algorithm>
#include <array>
#include <initializer_list>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace numerosity {

/// Visual encoding of a value. Wire names match the log's Test Name column.
enum class DisplayMode { Dice, Heap, Rect, Disc };

enum class ModeType { Discrete, Continuous };

inline constexpr std::array<DisplayMode, 4> kAllModes = {DisplayMode::Dice, DisplayMode::Heap,
                                                         DisplayMode::Rect, DisplayMode::Disc};

constexpr std::string_view wire_name(DisplayMode mode) noexcept {
    switch (mode) {
        case DisplayMode::Dice: return "dice";
        case DisplayMode::Heap: return "heap";
        case DisplayMode::Rect: return "rect";
        case DisplayMode::Disc: return "disc";
    }
    return "dice";
}

inline std::optional<DisplayMode> parse_mode(std::string_view name) noexcept {
    for (DisplayMode m : kAllModes)
        if (wire_name(m) == name) return m;
    return std::nullopt;
}

constexpr ModeType mode_type(DisplayMode mode) noexcept {
    return (mode == DisplayMode::Dice || mode == DisplayMode::Heap) ? ModeType::Discrete
                                                                    : ModeType::Continuous;
}

constexpr std::string_view to_string(ModeType type) noexcept {
    return type == ModeType::Discrete ? "Discrete" : "Continuous";
}

/// End-of-game score band.
enum class Tier { Low, Mid, High };

constexpr std::string_view to_string(Tier tier) noexcept {
    switch (tier) {
        case Tier::Low: return "Low";
        case Tier::Mid: return "Mid";
        case Tier::High: return "High";
    }
    return "Low";
}

/// Ordered set of 2..10 distinct positive integers the stimuli are drawn from.
class ValueDomain {
public:
    static constexpr std::size_t kMinSize = 2;
    static constexpr std::size_t kMaxSize = 10;

    ValueDomain() : values_{1, 2, 3, 4, 5} {}

    explicit ValueDomain(std::vector<int> values) : values_(std::move(values)) {
        if (values_.size() < kMinSize || values_.size() > kMaxSize)
            throw Error(ErrorCode::InvalidConfig, "value domain must hold 2 to 10 values");
        std::sort(values_.begin(), values_.end());
        if (std::adjacent_find(values_.begin(), values_.end()) != values_.end())
            throw Error(ErrorCode::InvalidConfig, "value domain has repeated values");
        if (values_.front() <= 0)
            throw Error(ErrorCode::InvalidConfig, "value domain must be strictly positive");
    }

    ValueDomain(std::initializer_list<int> values) : ValueDomain(std::vector<int>(values)) {}

    /// {1, ..., n}
    static ValueDomain range(int n) {
        std::vector<int> v;
        for (int i = 1; i <= n; ++i) v.push_back(i);
        return ValueDomain(std::move(v));
    }

    const std::vector<int>& values() const noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }
    bool contains(int v) const { return std::binary_search(values_.begin(), values_.end(), v); }
    int max() const noexcept { return values_.back(); }

    /// "[1,2,3,4,5]"
    std::string to_string() const {
        std::string s = "[";
        for (std::size_t i = 0; i < values_.size(); ++i) {
            if (i) s += ',';
            s += std::to_string(values_[i]);
        }
        return s + "]";
    }

    friend bool operator==(const ValueDomain&, const ValueDomain&) = default;

private:
    std::vector<int> values_;
};

} // namespace numerosity
