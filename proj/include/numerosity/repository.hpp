#pragma once

// Content-addressed store for raw session logs.
//
// Layout under the root directory:
//   objects/<sha256>      raw bytes exactly as uploaded
//   meta/<sha256>.json    upload metadata and parse summary
//   tmp/                  staging area; anything left here is garbage
//
// A log becomes visible only once its metadata file has been renamed into
// meta/. Both files are staged in tmp/ and renamed, so an interrupted ingest
// never exposes a partial log. The in-memory index is rebuilt from meta/ on
// open.

#include "numerosity/error.hpp"
#include "numerosity/stats.hpp"
#include "numerosity/timestamp.hpp"
#include "numerosity/trial_log.hpp"

#include <json.hpp>
#include <openssl/evp.h>
#include <unistd.h>

#include <array>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace numerosity {

inline std::string sha256_hex(std::string_view bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int length = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &length, EVP_sha256(), nullptr) != 1)
        throw Error(ErrorCode::StorageFailure, "sha256 failed");
    static constexpr char kHex[] = "0123456789abcdef";
    std::string hex;
    hex.reserve(length * 2);
    for (unsigned int i = 0; i < length; ++i) {
        hex += kHex[digest[i] >> 4];
        hex += kHex[digest[i] & 0xf];
    }
    return hex;
}

enum class ParseStatus { Ok, Warnings };

inline std::string_view to_string(ParseStatus s) { return s == ParseStatus::Ok ? "ok" : "warnings"; }

struct IngestMetadata {
    std::string subject;
    std::string experimenter;
    std::string device;
    LogFormat format = LogFormat::Csv;
};

struct StoredLogSummary {
    std::string log_id;
    std::string subject;
    std::string experimenter;
    std::string device;
    LogFormat format = LogFormat::Csv;
    Timestamp received_at{};
    ParseStatus status = ParseStatus::Ok;
    std::size_t warnings = 0;
    std::size_t records = 0;
    std::size_t bytes = 0;
    std::optional<Timestamp> first_record;
    std::optional<Timestamp> last_record;
    std::string session;
    std::vector<std::string> modes;
};

struct IngestResult {
    std::string log_id;
    ParseStatus status = ParseStatus::Ok;
    std::vector<LogWarning> warnings;
    std::size_t records = 0;
    bool duplicate = false;
};

struct LogFilter {
    std::optional<std::string> subject;
    std::optional<Timestamp> from;  // on the session's first record, inclusive
    std::optional<Timestamp> to;    // inclusive
    std::optional<DisplayMode> mode;

    bool matches(const StoredLogSummary& s) const {
        if (subject && s.subject != *subject) return false;
        if ((from || to) && !s.first_record) return false;
        if (from && *s.first_record < *from) return false;
        if (to && *s.first_record > *to) return false;
        if (mode && std::find(s.modes.begin(), s.modes.end(), wire_name(*mode)) == s.modes.end())
            return false;
        return true;
    }
};

inline nlohmann::json to_json(const StoredLogSummary& s) {
    nlohmann::json j = {{"log_id", s.log_id},
                        {"subject", s.subject},
                        {"experimenter", s.experimenter},
                        {"device", s.device},
                        {"format", std::string(to_string(s.format))},
                        {"received_at", render_iso(s.received_at)},
                        {"status", std::string(to_string(s.status))},
                        {"warnings", s.warnings},
                        {"records", s.records},
                        {"bytes", s.bytes},
                        {"session", s.session},
                        {"modes", s.modes}};
    j["first_record"] = s.first_record ? nlohmann::json(render_iso(*s.first_record)) : nlohmann::json();
    j["last_record"] = s.last_record ? nlohmann::json(render_iso(*s.last_record)) : nlohmann::json();
    return j;
}

inline StoredLogSummary summary_from_json(const nlohmann::json& j) {
    StoredLogSummary s;
    s.log_id = j.at("log_id").get<std::string>();
    s.subject = j.at("subject").get<std::string>();
    s.experimenter = j.at("experimenter").get<std::string>();
    s.device = j.at("device").get<std::string>();
    s.format = parse_log_format(j.at("format").get<std::string>()).value_or(LogFormat::Csv);
    s.received_at = parse_iso(j.at("received_at").get<std::string>()).value();
    s.status = j.at("status").get<std::string>() == "ok" ? ParseStatus::Ok : ParseStatus::Warnings;
    s.warnings = j.at("warnings").get<std::size_t>();
    s.records = j.at("records").get<std::size_t>();
    s.bytes = j.at("bytes").get<std::size_t>();
    s.session = j.at("session").get<std::string>();
    s.modes = j.at("modes").get<std::vector<std::string>>();
    if (!j.at("first_record").is_null())
        s.first_record = parse_iso(j.at("first_record").get<std::string>());
    if (!j.at("last_record").is_null())
        s.last_record = parse_iso(j.at("last_record").get<std::string>());
    return s;
}

class LogStore {
public:
    using Clock = std::function<Timestamp()>;
    /// Test seam: called with "object-written" and "meta-staged" during an
    /// ingest; throwing from it simulates a crash at that point.
    using FaultHook = std::function<void(std::string_view stage)>;

    explicit LogStore(std::filesystem::path root, Clock clock = local_now)
        : root_(std::move(root)), clock_(std::move(clock)) {
        namespace fs = std::filesystem;
        std::error_code ec;
        for (const char* dir : {"objects", "meta", "tmp"}) {
            fs::create_directories(root_ / dir, ec);
            if (ec) throw Error(ErrorCode::StorageFailure, "cannot create " + (root_ / dir).string());
        }
        for (const auto& entry : fs::directory_iterator(root_ / "tmp")) fs::remove(entry.path(), ec);
        rebuild_index();
    }

    const std::filesystem::path& root() const noexcept { return root_; }

    void set_fault_hook(FaultHook hook) { fault_hook_ = std::move(hook); }

    /// Parses and stores `raw`. Identical bytes map to the same id and are
    /// stored once. Throws UnrecognizedHeader for payloads that are not logs
    /// (nothing is stored) and StorageFailure on I/O errors.
    IngestResult ingest(std::string_view raw, const IngestMetadata& meta) {
        if (raw.empty()) throw Error(ErrorCode::UnrecognizedHeader, "empty payload");
        ParsedLog parsed = parse_log(raw, meta.format, ParseOptions{true});

        IngestResult result;
        result.log_id = sha256_hex(raw);
        result.records = parsed.records.size();
        result.warnings = parsed.warnings;
        result.status = parsed.warnings.empty() ? ParseStatus::Ok : ParseStatus::Warnings;

        std::lock_guard payload_lock(stripe_for(result.log_id));
        {
            std::shared_lock lock(index_mutex_);
            if (auto it = index_.find(result.log_id); it != index_.end()) {
                result.duplicate = true;
                result.status = it->second.status;
                return result;
            }
        }

        StoredLogSummary summary = summarize(result.log_id, raw, parsed, meta);
        summary.received_at = clock_();
        const auto object = root_ / "objects" / result.log_id;
        const auto meta_path = root_ / "meta" / (result.log_id + ".json");
        write_atomically(object, raw);
        if (fault_hook_) fault_hook_("object-written");
        const auto staged = stage(to_json(summary).dump(2));
        if (fault_hook_) fault_hook_("meta-staged");
        std::error_code ec;
        std::filesystem::rename(staged, meta_path, ec);
        if (ec) throw Error(ErrorCode::StorageFailure, "cannot publish " + meta_path.string());

        std::unique_lock lock(index_mutex_);
        index_.emplace(result.log_id, std::move(summary));
        return result;
    }

    /// Matching summaries ordered by received_at, then log_id.
    std::vector<StoredLogSummary> query(const LogFilter& filter = {}) const {
        std::vector<StoredLogSummary> out;
        {
            std::shared_lock lock(index_mutex_);
            for (const auto& [id, s] : index_)
                if (filter.matches(s)) out.push_back(s);
        }
        std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
            return a.received_at != b.received_at ? a.received_at < b.received_at
                                                  : a.log_id < b.log_id;
        });
        return out;
    }

    std::size_t size() const {
        std::shared_lock lock(index_mutex_);
        return index_.size();
    }

    std::string raw(const std::string& log_id) const {
        {
            std::shared_lock lock(index_mutex_);
            if (!index_.count(log_id)) throw Error(ErrorCode::NoData, "unknown log " + log_id);
        }
        std::ifstream in(root_ / "objects" / log_id, std::ios::binary);
        if (!in) throw Error(ErrorCode::StorageFailure, "missing object " + log_id);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    /// Parsed contents of every matching log, in query order.
    std::vector<LogInput> load(const LogFilter& filter) const {
        std::vector<LogInput> out;
        for (const auto& s : query(filter))
            out.push_back({s.log_id, parse_log(raw(s.log_id), s.format, ParseOptions{true})});
        return out;
    }

    /// Accuracy report over all of a subject's logs.
    StatsReport report(const std::string& subject, AnalyzeOptions options) const {
        LogFilter filter;
        filter.subject = subject;
        auto logs = load(filter);
        if (logs.empty()) throw Error(ErrorCode::NoData, "no logs for subject '" + subject + "'");
        options.subject = subject;
        return aggregate(logs, options);
    }

    void rebuild_index() {
        namespace fs = std::filesystem;
        std::map<std::string, StoredLogSummary> fresh;
        for (const auto& entry : fs::directory_iterator(root_ / "meta")) {
            if (entry.path().extension() != ".json") continue;
            std::ifstream in(entry.path());
            try {
                auto summary = summary_from_json(nlohmann::json::parse(in));
                if (fs::exists(root_ / "objects" / summary.log_id))
                    fresh.emplace(summary.log_id, std::move(summary));
            } catch (const std::exception&) {
                // Unreadable metadata means the log is not published.
            }
        }
        std::unique_lock lock(index_mutex_);
        index_ = std::move(fresh);
    }

private:
    static StoredLogSummary summarize(const std::string& id, std::string_view raw,
                                      const ParsedLog& parsed, const IngestMetadata& meta) {
        StoredLogSummary s;
        s.log_id = id;
        s.subject = meta.subject;
        s.experimenter = meta.experimenter;
        s.device = meta.device;
        s.format = meta.format;
        s.status = parsed.warnings.empty() ? ParseStatus::Ok : ParseStatus::Warnings;
        s.warnings = parsed.warnings.size();
        s.records = parsed.records.size();
        s.bytes = raw.size();
        std::set<std::string> modes;
        for (const auto& r : parsed.records) {
            modes.emplace(wire_name(r.test_name));
            if (!s.first_record || r.date < *s.first_record) s.first_record = r.date;
            if (!s.last_record || r.date > *s.last_record) s.last_record = r.date;
        }
        if (!parsed.records.empty()) s.session = session_key(parsed.records.front().date);
        s.modes.assign(modes.begin(), modes.end());
        return s;
    }

    std::filesystem::path stage(std::string_view bytes) {
        const auto path = root_ / "tmp" / ("stage-" + std::to_string(::getpid()) + "-" +
                                           std::to_string(counter_.fetch_add(1)));
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) throw Error(ErrorCode::StorageFailure, "cannot write " + path.string());
        return path;
    }

    void write_atomically(const std::filesystem::path& target, std::string_view bytes) {
        const auto staged = stage(bytes);
        std::error_code ec;
        std::filesystem::rename(staged, target, ec);
        if (ec) throw Error(ErrorCode::StorageFailure, "cannot write " + target.string());
    }

    std::mutex& stripe_for(const std::string& id) {
        return stripes_[std::hash<std::string>{}(id) % stripes_.size()];
    }

    std::filesystem::path root_;
    Clock clock_;
    FaultHook fault_hook_;
    mutable std::shared_mutex index_mutex_;
    std::map<std::string, StoredLogSummary> index_;
    std::array<std::mutex, 16> stripes_;
    std::atomic<std::uint64_t> counter_{0};
};

} // namespace numerosity
