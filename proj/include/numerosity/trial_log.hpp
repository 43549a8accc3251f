#pragma once

// Trial log codec. Two flavours share one record model:
//
//   .csv  machine-oriented, one line per answered trial, byte-compatible with
//         logs written by the original application (including its irregular
//         header spacing and the unquoted, comma-bearing last column);
//   .txt  human-oriented labelled blocks, one block per trial.
//
// A CSV data line has 13 leading fields; everything after the 13th comma is
// the free-form "Other Parameters" column, kept verbatim.

#include "numerosity/error.hpp"
#include "numerosity/timestamp.hpp"
#include "numerosity/types.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace numerosity {

inline constexpr std::size_t kMaxSlots = 5;

struct TrialRecord {
    long test_no = 1;
    DisplayMode test_name = DisplayMode::Dice;
    std::string learner;
    std::string trainer;
    std::array<std::optional<int>, kMaxSlots> c{};
    int value_selected = 0;
    bool correction = false;
    Timestamp date{};
    long answering_time_ms = 0;
    std::string other_parameters;

    /// Number of leading non-empty C columns.
    int set_size() const {
        int n = 0;
        while (n < static_cast<int>(kMaxSlots) && c[static_cast<std::size_t>(n)]) ++n;
        return n;
    }

    std::vector<int> values() const {
        std::vector<int> v;
        for (const auto& x : c)
            if (x) v.push_back(*x);
        return v;
    }

    friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

enum class LogFormat { Csv, Txt };

inline std::string_view to_string(LogFormat f) { return f == LogFormat::Csv ? "csv" : "txt"; }

inline std::optional<LogFormat> parse_log_format(std::string_view s) {
    if (s == "csv") return LogFormat::Csv;
    if (s == "txt") return LogFormat::Txt;
    return std::nullopt;
}

struct LogWarning {
    enum class Kind { InvariantViolation, MalformedLine };
    Kind kind = Kind::InvariantViolation;
    std::size_t line_no = 0;
    std::optional<std::size_t> record_index;  // set for InvariantViolation
    std::string message;
    std::string text;
};

struct ParsedLog {
    std::vector<TrialRecord> records;
    std::vector<LogWarning> warnings;

    /// True when the record at `index` contradicts the record invariants.
    bool flagged(std::size_t index) const {
        return std::any_of(warnings.begin(), warnings.end(),
                           [&](const LogWarning& w) { return w.record_index == index; });
    }
    std::size_t flagged_count() const {
        std::size_t n = 0;
        for (std::size_t i = 0; i < records.size(); ++i) n += flagged(i) ? 1 : 0;
        return n;
    }
};

struct ParseOptions {
    /// Collect malformed data lines as warnings instead of throwing.
    bool skip_malformed = false;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

template <typename Int>
std::optional<Int> parse_int(std::string_view s) {
    Int v{};
    if (s.empty()) return std::nullopt;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

inline std::optional<bool> parse_bool(std::string_view s) {
    if (s == "true") return true;
    if (s == "false") return false;
    return std::nullopt;
}

inline std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        if (end == text.size()) break;
        start = end + 1;
    }
    // A terminating newline does not introduce a line.
    if (!lines.empty() && lines.back().empty()) lines.pop_back();
    return lines;
}

inline bool is_elision(std::string_view line) { return trim(line) == "(...)"; }

inline bool has_forbidden_chars(std::string_view s) {
    return s.find('\n') != std::string_view::npos || s.find('\r') != std::string_view::npos;
}

} // namespace detail

/// Header line exactly as written by the original application.
inline const std::string& format_header_csv() {
    static const std::string header =
        "Test no, Test Name, Learner, Trainer, C_0, C_1, C_2, C_3, C_4, Value selected , "
        "Correction , Date, Answering Time (ms), Other Parameters";
    return header;
}

namespace detail {

inline std::string normalize_header(std::string_view line) {
    std::string out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        std::string_view field = trim(line.substr(start, comma - start));
        std::string collapsed;
        for (char ch : field) {
            if (ch == ' ' || ch == '\t') {
                if (!collapsed.empty() && collapsed.back() != ' ') collapsed += ' ';
            } else {
                collapsed += ch;
            }
        }
        if (!out.empty()) out += ',';
        out += collapsed;
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

} // namespace detail

/// Accepts the verbatim header or any whitespace-normalized variant of it.
inline bool is_recognized_header(std::string_view line) {
    line = detail::trim(line);
    if (line == format_header_csv()) return true;
    static const std::string canonical = detail::normalize_header(format_header_csv());
    return detail::normalize_header(line) == canonical;
}

/// Structural checks a record must pass before it can be written. Returns
/// an empty string when the record is writable.
inline std::string structural_problem(const TrialRecord& r) {
    if (r.test_no < 1) return "test number must be positive";
    const int n = r.set_size();
    if (n < 2) return "fewer than two values";
    for (std::size_t i = static_cast<std::size_t>(n); i < kMaxSlots; ++i)
        if (r.c[i]) return "non-contiguous value columns";
    if (r.answering_time_ms < 0) return "negative answering time";
    for (const std::string* s : {&r.learner, &r.trainer}) {
        if (s->find(',') != std::string::npos || detail::has_forbidden_chars(*s))
            return "name fields may not contain commas or line breaks";
        if (detail::trim(*s) != *s) return "name fields may not carry surrounding blanks";
    }
    if (detail::has_forbidden_chars(r.other_parameters))
        return "other parameters may not contain line breaks";
    return {};
}

/// Violations of the answer invariants (value among the presented ones,
/// distinct values, correction consistent with the maximum).
inline std::vector<std::string> invariant_violations(const TrialRecord& r) {
    std::vector<std::string> issues;
    std::vector<int> values = r.values();
    if (values.empty()) return issues;
    std::vector<int> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        issues.emplace_back("repeated value among presented values");
    if (std::find(values.begin(), values.end(), r.value_selected) == values.end())
        issues.emplace_back("selected value was not presented");
    const bool expected = r.value_selected == sorted.back();
    if (expected != r.correction)
        issues.emplace_back(std::string("correction is ") + (r.correction ? "true" : "false") +
                            " but selected value " + std::to_string(r.value_selected) +
                            (expected ? " is" : " is not") + " the maximum");
    return issues;
}

inline std::string format_record_csv(const TrialRecord& r) {
    if (auto problem = structural_problem(r); !problem.empty())
        throw Error(ErrorCode::InvalidRecord, problem);
    std::string line = std::to_string(r.test_no);
    line += ", ";
    line += wire_name(r.test_name);
    line += ", " + r.learner + ", " + r.trainer + ", ";
    for (std::size_t i = 0; i < kMaxSlots; ++i) {
        if (i) line += ',';
        if (r.c[i]) line += std::to_string(*r.c[i]);
    }
    line += ", " + std::to_string(r.value_selected) + ',' + (r.correction ? "true" : "false");
    line += ", " + render_log_date(r.date);
    line += ", " + std::to_string(r.answering_time_ms);
    line += ", " + r.other_parameters;
    return line;
}

/// Header plus one line per record, newline-terminated.
inline std::string format_log_csv(const std::vector<TrialRecord>& records) {
    std::string out = format_header_csv() + "\n";
    for (const auto& r : records) out += format_record_csv(r) + "\n";
    return out;
}

namespace detail {

/// Parses one CSV data line; returns an error message on failure.
inline std::string parse_csv_line(std::string_view line, TrialRecord& r) {
    constexpr std::size_t kLeadingFields = 13;
    std::array<std::string_view, kLeadingFields> fields;
    std::size_t start = 0;
    std::size_t count = 0;
    std::optional<std::size_t> rest;
    while (count < kLeadingFields) {
        const std::size_t comma = line.find(',', start);
        fields[count++] = trim(line.substr(start, comma == std::string_view::npos
                                                      ? std::string_view::npos
                                                      : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
        if (count == kLeadingFields) rest = start;
    }
    if (count < kLeadingFields) return "expected at least 13 fields";

    auto test_no = parse_int<long>(fields[0]);
    if (!test_no || *test_no < 1) return "bad test number";
    auto mode = parse_mode(fields[1]);
    if (!mode) return "unknown test name '" + std::string(fields[1]) + "'";
    r.test_no = *test_no;
    r.test_name = *mode;
    r.learner = std::string(fields[2]);
    r.trainer = std::string(fields[3]);
    for (std::size_t i = 0; i < kMaxSlots; ++i) {
        r.c[i].reset();
        if (fields[4 + i].empty()) continue;
        auto v = parse_int<int>(fields[4 + i]);
        if (!v) return "bad value in C_" + std::to_string(i);
        r.c[i] = *v;
    }
    const int n = r.set_size();
    if (n < 2) return "fewer than two values";
    for (std::size_t i = static_cast<std::size_t>(n); i < kMaxSlots; ++i)
        if (r.c[i]) return "non-contiguous value columns";
    auto selected = parse_int<int>(fields[9]);
    if (!selected) return "bad selected value";
    r.value_selected = *selected;
    auto correction = parse_bool(fields[10]);
    if (!correction) return "bad correction field";
    r.correction = *correction;
    auto date = parse_log_date(fields[11]);
    if (!date) return "bad date";
    r.date = *date;
    auto time = parse_int<long>(fields[12]);
    if (!time || *time < 0) return "bad answering time";
    r.answering_time_ms = *time;
    r.other_parameters.clear();
    if (rest) {
        std::string_view tail = line.substr(*rest);
        if (!tail.empty() && tail.front() == ' ') tail.remove_prefix(1);
        r.other_parameters = std::string(tail);
    }
    return {};
}

inline void check_invariants(ParsedLog& out, std::size_t line_no, std::string_view line) {
    const std::size_t index = out.records.size() - 1;
    for (auto& issue : invariant_violations(out.records.back()))
        out.warnings.push_back({LogWarning::Kind::InvariantViolation, line_no, index,
                                std::move(issue), std::string(line)});
}

} // namespace detail

/// Parses a CSV log. Blank lines and "(...)" elision markers are skipped.
/// Records violating the answer invariants are kept and reported as warnings.
inline ParsedLog parse_log(std::string_view text, ParseOptions options = {}) {
    const auto lines = detail::split_lines(text);
    std::size_t i = 0;
    while (i < lines.size() && detail::trim(lines[i]).empty()) ++i;
    if (i == lines.size() || !is_recognized_header(lines[i]))
        throw Error(ErrorCode::UnrecognizedHeader,
                    i == lines.size() ? "empty log" : "first line is not a trial-log header",
                    i == lines.size() ? std::nullopt : std::optional<std::size_t>(i + 1));
    ParsedLog out;
    for (++i; i < lines.size(); ++i) {
        const std::string_view line = lines[i];
        const std::size_t line_no = i + 1;
        if (detail::trim(line).empty() || detail::is_elision(line)) continue;
        TrialRecord r;
        if (auto err = detail::parse_csv_line(line, r); !err.empty()) {
            if (!options.skip_malformed)
                throw Error(ErrorCode::MalformedLine,
                            "line " + std::to_string(line_no) + ": " + err + ": " +
                                std::string(line),
                            line_no);
            out.warnings.push_back({LogWarning::Kind::MalformedLine, line_no, std::nullopt,
                                    std::move(err), std::string(line)});
            continue;
        }
        out.records.push_back(std::move(r));
        detail::check_invariants(out, line_no, line);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Human-readable flavour

namespace detail {

inline constexpr std::array<std::string_view, 14> kTxtLabels = {
    "Test no", "Test Name", "Learner", "Trainer", "C_0", "C_1", "C_2", "C_3", "C_4",
    "Value selected", "Correction", "Date", "Answering Time (ms)", "Other Parameters"};

inline void append_labeled(std::string& out, std::string_view label, std::string_view value) {
    out += label;
    out += ':';
    if (!value.empty()) {
        out += ' ';
        out += value;
    }
    out += '\n';
}

} // namespace detail

/// Labelled multi-line block, newline-terminated.
inline std::string format_record_txt(const TrialRecord& r) {
    if (auto problem = structural_problem(r); !problem.empty())
        throw Error(ErrorCode::InvalidRecord, problem);
    const auto& L = detail::kTxtLabels;
    std::string out;
    detail::append_labeled(out, L[0], std::to_string(r.test_no));
    detail::append_labeled(out, L[1], wire_name(r.test_name));
    detail::append_labeled(out, L[2], r.learner);
    detail::append_labeled(out, L[3], r.trainer);
    for (std::size_t i = 0; i < kMaxSlots; ++i)
        detail::append_labeled(out, L[4 + i], r.c[i] ? std::to_string(*r.c[i]) : "");
    detail::append_labeled(out, L[9], std::to_string(r.value_selected));
    detail::append_labeled(out, L[10], r.correction ? "true" : "false");
    detail::append_labeled(out, L[11], render_log_date(r.date));
    detail::append_labeled(out, L[12], std::to_string(r.answering_time_ms));
    detail::append_labeled(out, L[13], r.other_parameters);
    return out;
}

/// Blocks separated by one blank line.
inline std::string format_log_txt(const std::vector<TrialRecord>& records) {
    std::string out;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (i) out += '\n';
        out += format_record_txt(records[i]);
    }
    return out;
}

/// Parses the output of format_log_txt. A block is 14 labelled lines in
/// order; any deviation is a MalformedBlock.
inline ParsedLog parse_log_txt(std::string_view text, ParseOptions options = {}) {
    const auto lines = detail::split_lines(text);
    std::size_t i = 0;
    while (i < lines.size() && detail::trim(lines[i]).empty()) ++i;
    if (i == lines.size() || lines[i].rfind("Test no:", 0) != 0)
        throw Error(ErrorCode::UnrecognizedHeader, "not a labelled trial log");

    ParsedLog out;
    while (i < lines.size()) {
        if (detail::trim(lines[i]).empty()) {
            ++i;
            continue;
        }
        const std::size_t block_line = i + 1;
        std::string fail;
        std::array<std::string_view, 14> values;
        std::string raw;
        for (std::size_t f = 0; f < values.size(); ++f) {
            if (i + f >= lines.size()) {
                fail = "truncated block";
                break;
            }
            std::string_view line = lines[i + f];
            raw += line;
            raw += '\n';
            const auto& label = detail::kTxtLabels[f];
            if (line.size() < label.size() + 1 || line.substr(0, label.size()) != label ||
                line[label.size()] != ':') {
                fail = "expected label '" + std::string(label) + "'";
                break;
            }
            std::string_view value = line.substr(label.size() + 1);
            if (!value.empty() && value.front() == ' ') value.remove_prefix(1);
            values[f] = value;
        }
        TrialRecord r;
        if (fail.empty()) {
            // Reuse the CSV field grammar for the leading fields.
            std::string csv;
            for (std::size_t f = 0; f < 13; ++f) {
                if (f) csv += f >= 5 && f <= 8 ? "," : ", ";
                csv += values[f];
            }
            csv += ", ";
            csv += values[13];
            if (values[2].find(',') != std::string_view::npos ||
                values[3].find(',') != std::string_view::npos)
                fail = "name fields may not contain commas";
            else
                fail = detail::parse_csv_line(csv, r);
            if (fail.empty()) {
                r.learner = std::string(values[2]);
                r.trainer = std::string(values[3]);
                r.other_parameters = std::string(values[13]);
            }
        }
        if (!fail.empty()) {
            if (!options.skip_malformed)
                throw Error(ErrorCode::MalformedBlock,
                            "block at line " + std::to_string(block_line) + ": " + fail,
                            block_line);
            out.warnings.push_back(
                {LogWarning::Kind::MalformedLine, block_line, std::nullopt, fail, raw});
            // Resynchronise on the next blank line.
            while (i < lines.size() && !detail::trim(lines[i]).empty()) ++i;
            continue;
        }
        out.records.push_back(std::move(r));
        detail::check_invariants(out, block_line, raw);
        i += values.size();
    }
    return out;
}

inline ParsedLog parse_log(std::string_view text, LogFormat format, ParseOptions options = {}) {
    return format == LogFormat::Csv ? parse_log(text, options) : parse_log_txt(text, options);
}

inline std::string format_log(const std::vector<TrialRecord>& records, LogFormat format) {
    return format == LogFormat::Csv ? format_log_csv(records) : format_log_txt(records);
}

} // namespace numerosity
