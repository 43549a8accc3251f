#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace numerosity {

enum class ErrorCode {
    InvalidConfig,
    SlotOutOfRange,
    InvalidTiming,
    IllegalTransition,
    MissingVocabularyEntry,
    InvalidRecord,
    UnrecognizedHeader,
    MalformedLine,
    MalformedBlock,
    DomainError,
    MixedSetSizeCell,
    UnexpectedValueOutsideDomain,
    DegenerateInput,
    MissingPairEntry,
    NoData,
    StorageFailure,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::SlotOutOfRange: return "SlotOutOfRange";
        case ErrorCode::InvalidTiming: return "InvalidTiming";
        case ErrorCode::IllegalTransition: return "IllegalTransition";
        case ErrorCode::MissingVocabularyEntry: return "MissingVocabularyEntry";
        case ErrorCode::InvalidRecord: return "InvalidRecord";
        case ErrorCode::UnrecognizedHeader: return "UnrecognizedHeader";
        case ErrorCode::MalformedLine: return "MalformedLine";
        case ErrorCode::MalformedBlock: return "MalformedBlock";
        case ErrorCode::DomainError: return "DomainError";
        case ErrorCode::MixedSetSizeCell: return "MixedSetSizeCell";
        case ErrorCode::UnexpectedValueOutsideDomain: return "UnexpectedValueOutsideDomain";
        case ErrorCode::DegenerateInput: return "DegenerateInput";
        case ErrorCode::MissingPairEntry: return "MissingPairEntry";
        case ErrorCode::NoData: return "NoData";
        case ErrorCode::StorageFailure: return "StorageFailure";
    }
    return "Unknown";
}

/// Single exception type for the library; callers branch on code().
/// Parse errors carry the 1-based line number of the offending input.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message,
          std::optional<std::size_t> line = std::nullopt)
        : std::runtime_error(std::string(to_string(code)) + ": " + message),
          code_(code), line_(line) {}

    ErrorCode code() const noexcept { return code_; }
    std::optional<std::size_t> line() const noexcept { return line_; }

private:
    ErrorCode code_;
    std::optional<std::size_t> line_;
};

} // namespace numerosity
