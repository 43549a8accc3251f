#pragma once

// Accuracy aggregation, pair-level summaries and correlations over parsed
// trial logs.

#include "numerosity/binomial.hpp"
#include "numerosity/error.hpp"
#include "numerosity/trial_log.hpp"
#include "numerosity/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace numerosity {

// ---------------------------------------------------------------------------
// Cells

struct Cell {
    std::size_t n = 0;
    std::size_t k = 0;
    double accuracy = 0.0;
    double p_value = 1.0;

    bool empty() const noexcept { return n == 0; }
};

/// n, k, accuracy and one-sided binomial p for records sharing one set size.
inline Cell compute_cell(std::span<const TrialRecord* const> records, bool exact_chance = false) {
    Cell cell;
    if (records.empty()) return cell;
    const int set_size = records.front()->set_size();
    for (const TrialRecord* r : records) {
        if (r->set_size() != set_size)
            throw Error(ErrorCode::MixedSetSizeCell, "a cell may not mix chance levels");
        ++cell.n;
        if (r->correction) ++cell.k;
    }
    cell.accuracy = static_cast<double>(cell.k) / static_cast<double>(cell.n);
    cell.p_value = binomial_tail(static_cast<std::int64_t>(cell.k),
                                 static_cast<std::int64_t>(cell.n),
                                 chance_level(set_size, exact_chance));
    return cell;
}

/// Integer percent, rounded half away from zero, computed exactly.
inline long percent_rounded(std::size_t k, std::size_t n) {
    return static_cast<long>((200 * k + n) / (2 * n));
}

/// One significant digit: 1.95e-117 -> "2e-117", 0.1 -> "1e-1", 1 -> "1e0".
inline std::string format_p_value(double p) {
    if (p == 0.0) return "0";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.0e", p);
    std::string s(buf);
    const auto e = s.find('e');
    const std::string mantissa = s.substr(0, e);
    const int exponent = std::stoi(s.substr(e + 1));
    return mantissa + "e" + std::to_string(exponent);
}

/// "82 (2e-117)" or "(no data)".
inline std::string format_cell(const Cell& cell) {
    if (cell.empty()) return "(no data)";
    return std::to_string(percent_rounded(cell.k, cell.n)) + " (" + format_p_value(cell.p_value) +
           ")";
}

// ---------------------------------------------------------------------------
// Report grid

/// Column order follows the published tables.
enum class Column { Dice, Heap, Discrete, Disc, Rect, Continuous, Total };

inline constexpr std::array<Column, 7> kAllColumns = {Column::Dice,   Column::Heap, Column::Discrete,
                                                      Column::Disc,   Column::Rect, Column::Continuous,
                                                      Column::Total};

constexpr std::string_view to_string(Column c) noexcept {
    switch (c) {
        case Column::Dice: return "Dice";
        case Column::Heap: return "Heap";
        case Column::Discrete: return "Discrete";
        case Column::Disc: return "Disc";
        case Column::Rect: return "Rect";
        case Column::Continuous: return "Continuous";
        case Column::Total: return "Total";
    }
    return "Total";
}

constexpr bool column_contains(Column c, DisplayMode m) noexcept {
    switch (c) {
        case Column::Dice: return m == DisplayMode::Dice;
        case Column::Heap: return m == DisplayMode::Heap;
        case Column::Disc: return m == DisplayMode::Disc;
        case Column::Rect: return m == DisplayMode::Rect;
        case Column::Discrete: return mode_type(m) == ModeType::Discrete;
        case Column::Continuous: return mode_type(m) == ModeType::Continuous;
        case Column::Total: return true;
    }
    return false;
}

constexpr bool is_mode_column(Column c) noexcept {
    return c == Column::Dice || c == Column::Heap || c == Column::Disc || c == Column::Rect;
}
constexpr bool is_type_column(Column c) noexcept {
    return c == Column::Discrete || c == Column::Continuous;
}

struct GroupBy {
    bool session = true;
    bool mode = true;
    bool type = true;

    /// Parses "session,mode,type" (any subset, any order).
    static GroupBy parse(std::string_view spec) {
        GroupBy g{false, false, false};
        std::size_t start = 0;
        while (start <= spec.size()) {
            std::size_t comma = spec.find(',', start);
            if (comma == std::string_view::npos) comma = spec.size();
            const std::string_view key = detail::trim(spec.substr(start, comma - start));
            if (key == "session") g.session = true;
            else if (key == "mode") g.mode = true;
            else if (key == "type") g.type = true;
            else if (!key.empty())
                throw Error(ErrorCode::DomainError, "unknown grouping key '" + std::string(key) + "'");
            start = comma + 1;
        }
        return g;
    }

    bool includes(Column c) const noexcept {
        if (is_mode_column(c)) return mode;
        if (is_type_column(c)) return type;
        return true;
    }
};

struct AnalyzeOptions {
    std::string subject;
    GroupBy group_by;
    std::vector<int> set_sizes;  // empty: every set size present
    bool exact_chance = false;
    bool include_flagged = false;
};

/// A parsed log together with where it came from. One log is one session.
struct LogInput {
    std::string source;
    ParsedLog log;
};

struct ReportRow {
    std::string label;
    std::array<std::optional<Cell>, kAllColumns.size()> cells;  // nullopt: column not grouped

    const std::optional<Cell>& at(Column c) const { return cells[static_cast<std::size_t>(c)]; }
};

struct SetSizeTable {
    int set_size = 2;
    double chance = 0.5;
    std::vector<ReportRow> sessions;  // empty unless grouped by session
    ReportRow total;
};

struct StatsReport {
    AnalyzeOptions options;
    std::vector<SetSizeTable> tables;
    std::size_t records_used = 0;
    std::size_t flagged_excluded = 0;
};

/// "19,17h": day of month and hour of the session's first record.
inline std::string session_key(Timestamp first_record) {
    const CivilTime c = to_civil(first_record);
    char buf[16];
    std::snprintf(buf, sizeof buf, "%02u,%02dh", c.day, c.hour);
    return buf;
}

namespace detail {

inline ReportRow build_row(std::string label, const std::vector<const TrialRecord*>& records,
                           const AnalyzeOptions& options) {
    ReportRow row;
    row.label = std::move(label);
    for (Column c : kAllColumns) {
        if (!options.group_by.includes(c)) continue;
        std::vector<const TrialRecord*> subset;
        for (const TrialRecord* r : records)
            if (column_contains(c, r->test_name)) subset.push_back(r);
        row.cells[static_cast<std::size_t>(c)] = compute_cell(subset, options.exact_chance);
    }
    return row;
}

} // namespace detail

/// Builds the accuracy grid. Session rows are ordered by their first record,
/// so the result does not depend on the order logs are supplied in. Logs whose
/// sessions share a key are merged into one row.
inline StatsReport aggregate(const std::vector<LogInput>& logs, const AnalyzeOptions& options) {
    StatsReport report;
    report.options = options;

    struct SessionRecords {
        Timestamp first;
        std::string key;
        std::vector<const TrialRecord*> records;
    };
    std::vector<SessionRecords> sessions;
    std::map<std::string, std::size_t> by_key;
    std::map<int, std::vector<const TrialRecord*>> by_size;

    for (const LogInput& input : logs) {
        if (input.log.records.empty()) continue;
        const Timestamp first = input.log.records.front().date;
        const std::string key = session_key(first);
        auto [it, inserted] = by_key.try_emplace(key, sessions.size());
        if (inserted) sessions.push_back({first, key, {}});
        SessionRecords& session = sessions[it->second];
        session.first = std::min(session.first, first);
        for (std::size_t i = 0; i < input.log.records.size(); ++i) {
            const TrialRecord& r = input.log.records[i];
            if (!options.set_sizes.empty() &&
                std::find(options.set_sizes.begin(), options.set_sizes.end(), r.set_size()) ==
                    options.set_sizes.end())
                continue;
            if (!options.include_flagged && input.log.flagged(i)) {
                ++report.flagged_excluded;
                continue;
            }
            session.records.push_back(&r);
            by_size[r.set_size()].push_back(&r);
            ++report.records_used;
        }
    }
    std::stable_sort(sessions.begin(), sessions.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first < b.first : a.key < b.key;
    });

    std::vector<int> sizes = options.set_sizes;
    if (sizes.empty())
        for (const auto& [size, records] : by_size) sizes.push_back(size);
    std::sort(sizes.begin(), sizes.end());
    sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());

    for (int size : sizes) {
        SetSizeTable table;
        table.set_size = size;
        table.chance = chance_level(size, options.exact_chance);
        if (options.group_by.session) {
            for (const SessionRecords& s : sessions) {
                std::vector<const TrialRecord*> subset;
                for (const TrialRecord* r : s.records)
                    if (r->set_size() == size) subset.push_back(r);
                if (subset.empty()) continue;
                table.sessions.push_back(detail::build_row(s.key, subset, options));
            }
        }
        table.total = detail::build_row("Total", by_size[size], options);
        report.tables.push_back(std::move(table));
    }
    return report;
}

enum class ReportFormat { Markdown, Csv };

namespace detail {

inline std::string format_chance(double chance) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", chance);
    return buf;
}

inline std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

} // namespace detail

inline std::string render_report(const StatsReport& report, ReportFormat format) {
    const AnalyzeOptions& opt = report.options;
    std::vector<Column> columns;
    for (Column c : kAllColumns)
        if (opt.group_by.includes(c)) columns.push_back(c);

    std::string out;
    if (format == ReportFormat::Markdown) {
        out += "# Accuracy report";
        if (!opt.subject.empty()) out += ": " + opt.subject;
        out += "\n\n";
        out += std::string("Chance levels: ") + (opt.exact_chance ? "exact (1/set size)" : "0.5, 0.33, 0.25") + "\n";
        out += "Records analysed: " + std::to_string(report.records_used) + "\n";
        out += "Flagged records " + std::string(opt.include_flagged ? "included" : "excluded") +
               ": " + std::to_string(opt.include_flagged ? 0 : report.flagged_excluded) + "\n";
        if (report.tables.empty()) out += "\n(no data)\n";
        for (const SetSizeTable& table : report.tables) {
            out += "\n## Maximal value out of " + std::to_string(table.set_size) + " (chance " +
                   detail::format_chance(table.chance) + ")\n\n";
            out += "| Session |";
            for (Column c : columns) out += " " + std::string(to_string(c)) + " |";
            out += "\n|---|";
            for (std::size_t i = 0; i < columns.size(); ++i) out += "---|";
            out += "\n";
            auto emit = [&](const ReportRow& row) {
                out += "| " + row.label + " |";
                for (Column c : columns) out += " " + format_cell(*row.at(c)) + " |";
                out += "\n";
            };
            for (const ReportRow& row : table.sessions) emit(row);
            emit(table.total);
        }
        return out;
    }

    out += "set_size,chance,session,group,n,k,accuracy_percent,p_value,cell\n";
    for (const SetSizeTable& table : report.tables) {
        auto emit = [&](const ReportRow& row) {
            for (Column c : columns) {
                const Cell& cell = *row.at(c);
                out += std::to_string(table.set_size) + "," + detail::format_chance(table.chance) +
                       "," + detail::csv_quote(row.label) + "," + std::string(to_string(c)) + "," +
                       std::to_string(cell.n) + "," + std::to_string(cell.k) + ",";
                if (!cell.empty()) {
                    char p[40];
                    std::snprintf(p, sizeof p, "%.6e", cell.p_value);
                    out += std::to_string(percent_rounded(cell.k, cell.n)) + "," + p;
                } else {
                    out += ",";
                }
                out += "," + format_cell(cell) + "\n";
            }
        };
        for (const ReportRow& row : table.sessions) emit(row);
        emit(table.total);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Pair-level summaries

struct PairSummary {
    int smaller = 0;
    int larger = 0;
    std::size_t n = 0;
    std::size_t k = 0;
    std::optional<double> accuracy;  // nullopt when the pair was never presented

    int total() const noexcept { return smaller + larger; }
    int difference() const noexcept { return larger - smaller; }
    /// Exact smaller/larger; ratio_value() * larger == smaller.
    double ratio_value() const noexcept { return static_cast<double>(smaller) / larger; }

    std::string label() const {
        return "{" + std::to_string(smaller) + "," + std::to_string(larger) + "}";
    }
};

/// Exact rational truncated to two decimals with trailing zeros dropped:
/// 1/3 -> "0.33", 2/3 -> "0.66", 1/5 -> "0.2".
inline std::string format_ratio(int numerator, int denominator) {
    const long hundredths = 100L * numerator / denominator;
    std::string s = std::to_string(hundredths / 100);
    const long frac = hundredths % 100;
    if (frac == 0) return s;
    char buf[4];
    std::snprintf(buf, sizeof buf, "%02ld", frac);
    std::string digits(buf);
    if (digits.back() == '0') digits.pop_back();
    return s + "." + digits;
}

/// Every unordered pair of the domain, lexicographic, derived columns only.
inline std::vector<PairSummary> pair_rows(const ValueDomain& domain) {
    std::vector<PairSummary> rows;
    const auto& v = domain.values();
    for (std::size_t i = 0; i < v.size(); ++i)
        for (std::size_t j = i + 1; j < v.size(); ++j) rows.push_back({v[i], v[j], 0, 0, std::nullopt});
    return rows;
}

/// Per-pair accuracy over 2-value trials, ignoring presentation order.
inline std::vector<PairSummary> pair_summaries(std::span<const TrialRecord* const> records,
                                               const ValueDomain& domain = ValueDomain{}) {
    std::vector<PairSummary> rows = pair_rows(domain);
    for (const TrialRecord* r : records) {
        if (r->set_size() != 2)
            throw Error(ErrorCode::DomainError, "pair summaries need 2-value trials");
        const int a = std::min(*r->c[0], *r->c[1]);
        const int b = std::max(*r->c[0], *r->c[1]);
        if (!domain.contains(a) || !domain.contains(b) || a == b)
            throw Error(ErrorCode::UnexpectedValueOutsideDomain,
                        "pair {" + std::to_string(a) + "," + std::to_string(b) +
                            "} is not a pair of the domain " + domain.to_string());
        for (PairSummary& row : rows) {
            if (row.smaller == a && row.larger == b) {
                ++row.n;
                if (r->correction) ++row.k;
            }
        }
    }
    for (PairSummary& row : rows)
        if (row.n) row.accuracy = static_cast<double>(row.k) / static_cast<double>(row.n);
    return rows;
}

inline std::vector<PairSummary> pair_summaries(const std::vector<TrialRecord>& records,
                                               const ValueDomain& domain = ValueDomain{}) {
    std::vector<const TrialRecord*> ptrs;
    for (const auto& r : records) ptrs.push_back(&r);
    return pair_summaries(ptrs, domain);
}

// ---------------------------------------------------------------------------
// Correlation

/// Product-moment correlation coefficient.
inline double pearson(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw Error(ErrorCode::DegenerateInput, "need two equally long series of length >= 2");
    const double n = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw Error(ErrorCode::DegenerateInput, "zero variance");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

inline constexpr std::array<std::string_view, 4> kPairVariables = {"Total", "Difference", "Ratio",
                                                                   "Accuracy"};

struct CorrelationReport {
    std::array<std::array<double, 4>, 4> matrix{};
    /// columns[v][row]: value of variable v for each pair that has data.
    std::array<std::vector<double>, 4> columns;
    std::vector<std::string> labels;

    double at(std::string_view a, std::string_view b) const {
        auto index = [](std::string_view name) {
            for (std::size_t i = 0; i < kPairVariables.size(); ++i)
                if (kPairVariables[i] == name) return i;
            throw Error(ErrorCode::DomainError, "unknown variable " + std::string(name));
        };
        return matrix[index(a)][index(b)];
    }
};

/// Pairwise correlations among Total, Difference, Ratio and Accuracy over
/// the pairs that were presented at least once.
inline CorrelationReport correlation_report(const std::vector<PairSummary>& pairs) {
    CorrelationReport report;
    for (const PairSummary& p : pairs) {
        if (!p.accuracy) continue;
        report.labels.push_back(p.label());
        report.columns[0].push_back(p.total());
        report.columns[1].push_back(p.difference());
        report.columns[2].push_back(p.ratio_value());
        report.columns[3].push_back(*p.accuracy);
    }
    for (std::size_t i = 0; i < 4; ++i) {
        report.matrix[i][i] = 1.0;
        for (std::size_t j = i + 1; j < 4; ++j) {
            const double r = pearson(report.columns[i], report.columns[j]);
            report.matrix[i][j] = r;
            report.matrix[j][i] = r;
        }
    }
    return report;
}

/// Pair table, correlation matrix and scatter series as one CSV document
/// with '#'-prefixed section markers.
inline std::string render_correlation_csv(const std::vector<PairSummary>& pairs,
                                          const CorrelationReport& report) {
    auto num = [](double v) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.6f", v);
        return std::string(buf);
    };
    std::string out = "# pairs\nvalue_set,total,difference,ratio,n,k,accuracy_percent\n";
    for (const PairSummary& p : pairs) {
        out += detail::csv_quote(p.label()) + "," + std::to_string(p.total()) + "," +
               std::to_string(p.difference()) + "," + format_ratio(p.smaller, p.larger) + "," +
               std::to_string(p.n) + "," + std::to_string(p.k) + "," +
               (p.n ? std::to_string(percent_rounded(p.k, p.n)) : std::string()) + "\n";
    }
    out += "# correlation\nvariable";
    for (auto v : kPairVariables) out += "," + std::string(v);
    out += "\n";
    for (std::size_t i = 0; i < 4; ++i) {
        out += std::string(kPairVariables[i]);
        for (std::size_t j = 0; j < 4; ++j) out += "," + num(report.matrix[i][j]);
        out += "\n";
    }
    out += "# scatter\nx_variable,y_variable,value_set,x,y\n";
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = i + 1; j < 4; ++j)
            for (std::size_t row = 0; row < report.labels.size(); ++row)
                out += std::string(kPairVariables[i]) + "," + std::string(kPairVariables[j]) + "," +
                       detail::csv_quote(report.labels[row]) + "," + num(report.columns[i][row]) +
                       "," + num(report.columns[j][row]) + "\n";
    return out;
}

/// Records eligible for analysis: flagged ones dropped unless requested.
inline std::vector<const TrialRecord*> usable_records(const std::vector<LogInput>& logs,
                                                      bool include_flagged,
                                                      std::optional<int> set_size = std::nullopt) {
    std::vector<const TrialRecord*> out;
    for (const LogInput& in : logs)
        for (std::size_t i = 0; i < in.log.records.size(); ++i) {
            const TrialRecord& r = in.log.records[i];
            if (set_size && r.set_size() != *set_size) continue;
            if (!include_flagged && in.log.flagged(i)) continue;
            out.push_back(&r);
        }
    return out;
}

struct CorrelationResult {
    std::vector<PairSummary> pairs;
    CorrelationReport report;
};

/// Pair table and correlations over the 2-value trials of `logs`.
inline CorrelationResult correlate(const std::vector<LogInput>& logs, bool include_flagged = false,
                                   const ValueDomain& domain = ValueDomain{}) {
    const auto records = usable_records(logs, include_flagged, 2);
    if (records.empty()) throw Error(ErrorCode::NoData, "no 2-value trials");
    CorrelationResult out;
    out.pairs = pair_summaries(records, domain);
    out.report = correlation_report(out.pairs);
    return out;
}

} // namespace numerosity
