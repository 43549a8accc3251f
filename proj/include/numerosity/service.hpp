#pragma once

// JSON-over-HTTP front end: log repository routes and the session API used
// by the touchscreen client. One process serves both namespaces.

#include "numerosity/error.hpp"
#include "numerosity/repository.hpp"
#include "numerosity/stats.hpp"
#include "numerosity/trial_engine.hpp"

#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

namespace numerosity {

using nlohmann::json;

// ---------------------------------------------------------------------------
// JSON codecs

inline json to_json(const GameConfig& c) {
    return {{"mode", std::string(wire_name(c.mode))},
            {"domain", c.domain.values()},
            {"set_size", c.set_size},
            {"trials_per_game", c.trials_per_game},
            {"score_boundaries", {c.lower_boundary, c.upper_boundary}},
            {"inter_trial_delay_ms", c.inter_trial_delay_ms},
            {"long_press_threshold_ms", c.long_press_threshold_ms},
            {"appearance",
             {{"background", c.appearance.background},
              {"foreground", c.appearance.foreground},
              {"background_opacity", c.appearance.background_opacity}}},
            {"vocabulary", c.vocabulary.words()}};
}

/// Missing fields keep their defaults. Throws InvalidConfig.
inline GameConfig game_config_from_json(const json& j) {
    GameConfig c;
    try {
        if (j.contains("mode")) {
            auto mode = parse_mode(j.at("mode").get<std::string>());
            if (!mode) throw Error(ErrorCode::InvalidConfig, "unknown mode");
            c.mode = *mode;
        }
        if (j.contains("domain")) c.domain = ValueDomain(j.at("domain").get<std::vector<int>>());
        if (j.contains("set_size")) c.set_size = j.at("set_size").get<int>();
        if (j.contains("trials_per_game")) c.trials_per_game = j.at("trials_per_game").get<int>();
        if (j.contains("score_boundaries")) {
            const auto b = j.at("score_boundaries").get<std::vector<double>>();
            if (b.size() != 2) throw Error(ErrorCode::InvalidConfig, "two score boundaries expected");
            c.lower_boundary = b[0];
            c.upper_boundary = b[1];
        }
        if (j.contains("inter_trial_delay_ms")) c.inter_trial_delay_ms = j.at("inter_trial_delay_ms").get<long>();
        if (j.contains("long_press_threshold_ms"))
            c.long_press_threshold_ms = j.at("long_press_threshold_ms").get<long>();
        if (j.contains("appearance")) {
            const auto& a = j.at("appearance");
            c.appearance.background = a.value("background", c.appearance.background);
            c.appearance.foreground = a.value("foreground", c.appearance.foreground);
            if (a.contains("background_opacity")) {
                const auto& o = a.at("background_opacity");
                c.appearance.background_opacity = o.is_string() ? o.get<std::string>() : o.dump();
            }
        }
        if (j.contains("vocabulary"))
            for (const auto& [key, word] : j.at("vocabulary").items())
                c.vocabulary.set(key, word.get<std::string>());
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, e.what());
    }
    c.validate();
    return c;
}

inline json to_json(const FeedbackEvent& e) {
    json j = {{"timestamp", render_iso(e.timestamp)},
              {"kind", std::string(to_string(e.kind))},
              {"word", e.spoken_word}};
    if (e.tier) j["tier"] = std::string(to_string(*e.tier));
    if (e.mode) j["mode"] = std::string(wire_name(*e.mode));
    return j;
}

/// Client-facing snapshot. The pending trial's values are included for the
/// subject's screen; the correct slot is not.
inline json to_json(const SessionState& s) {
    json j = {{"phase", std::string(to_string(s.phase))},
              {"mode", std::string(wire_name(s.config.mode))},
              {"trial_in_game", s.trial_in_game},
              {"correct_in_game", s.correct_in_game},
              {"last_test_no", s.last_test_no},
              {"games_completed", s.games_completed},
              {"config", to_json(s.config)}};
    j["last_tier"] = s.last_tier ? json(std::string(to_string(*s.last_tier))) : json();
    if (s.pending)
        j["trial"] = {{"mode", std::string(wire_name(s.pending->spec.mode))},
                      {"values", s.pending->spec.values},
                      {"displayed_at", render_iso(s.pending->displayed_at)}};
    else
        j["trial"] = json();
    return j;
}

/// {"type": "select_mode"|"touch_slot"|"exit"|"long_press"|"continue"|"apply_settings", ...}
inline UserInput user_input_from_json(const json& j) {
    try {
        const std::string type = j.at("type").get<std::string>();
        if (type == "select_mode") {
            auto mode = parse_mode(j.at("mode").get<std::string>());
            if (!mode) throw Error(ErrorCode::IllegalTransition, "unknown mode");
            return input::SelectMode{*mode};
        }
        if (type == "touch_slot") {
            const long slot = j.at("slot").get<long>();
            if (slot < 0) throw Error(ErrorCode::SlotOutOfRange, "negative slot");
            return input::TouchSlot{static_cast<std::size_t>(slot)};
        }
        if (type == "exit") return input::ExitButton{};
        if (type == "long_press") return input::LongPress{j.at("duration_ms").get<long>()};
        if (type == "continue") return input::ContinuePlaying{};
        if (type == "apply_settings") return input::ApplySettings{game_config_from_json(j.at("config"))};
        throw Error(ErrorCode::IllegalTransition, "unknown input type '" + type + "'");
    } catch (const json::exception& e) {
        throw Error(ErrorCode::IllegalTransition, std::string("malformed input: ") + e.what());
    }
}

inline json to_json(const LogWarning& w) {
    return {{"line", w.line_no},
            {"kind", w.kind == LogWarning::Kind::InvariantViolation ? "InvariantViolation"
                                                                    : "MalformedLine"},
            {"message", w.message}};
}

inline json cells_to_json(const StatsReport& report) {
    json tables = json::array();
    auto row_json = [&](const ReportRow& row) {
        json cells = json::object();
        for (Column c : kAllColumns) {
            const auto& cell = row.at(c);
            if (!cell) continue;
            cells[std::string(to_string(c))] =
                cell->empty() ? json{{"n", 0}, {"k", 0}, {"text", "(no data)"}}
                              : json{{"n", cell->n},
                                     {"k", cell->k},
                                     {"accuracy", cell->accuracy},
                                     {"p_value", cell->p_value},
                                     {"text", format_cell(*cell)}};
        }
        return json{{"session", row.label}, {"cells", cells}};
    };
    for (const auto& t : report.tables) {
        json rows = json::array();
        for (const auto& r : t.sessions) rows.push_back(row_json(r));
        tables.push_back({{"set_size", t.set_size},
                          {"chance", t.chance},
                          {"sessions", rows},
                          {"total", row_json(t.total)}});
    }
    return {{"subject", report.options.subject},
            {"records", report.records_used},
            {"flagged_excluded", report.flagged_excluded},
            {"tables", tables}};
}

inline json to_json(const CorrelationResult& c) {
    json pairs = json::array();
    for (const auto& p : c.pairs) {
        json row = {{"value_set", p.label()},   {"total", p.total()}, {"difference", p.difference()},
                    {"ratio", p.ratio_value()}, {"n", p.n},           {"k", p.k}};
        row["accuracy"] = p.accuracy ? json(*p.accuracy) : json();
        pairs.push_back(row);
    }
    json matrix = json::array();
    for (const auto& row : c.report.matrix) matrix.push_back(row);
    json scatter = json::object();
    for (std::size_t v = 0; v < kPairVariables.size(); ++v)
        scatter[std::string(kPairVariables[v])] = c.report.columns[v];
    return {{"variables", kPairVariables},
            {"matrix", matrix},
            {"pairs", pairs},
            {"scatter", {{"value_sets", c.report.labels}, {"series", scatter}}}};
}

inline int http_status(ErrorCode code) {
    switch (code) {
        case ErrorCode::UnrecognizedHeader:
        case ErrorCode::MalformedLine:
        case ErrorCode::MalformedBlock:
        case ErrorCode::InvalidRecord: return 422;
        case ErrorCode::NoData: return 404;
        case ErrorCode::IllegalTransition:
        case ErrorCode::InvalidTiming: return 409;
        case ErrorCode::StorageFailure: return 500;
        default: return 400;
    }
}

// ---------------------------------------------------------------------------
// Service

struct SessionHandle {
    std::mutex mutex;  // serialises step(); the session is single-writer
    std::unique_ptr<Session> session;
};

class Service {
public:
    using Clock = std::function<Timestamp()>;

    explicit Service(LogStore& store, Clock clock = local_now)
        : store_(store), clock_(std::move(clock)) {
        register_routes();
    }

    httplib::Server& server() noexcept { return server_; }

    /// Binds and serves on a background thread; returns the bound port.
    int start(const std::string& host = "127.0.0.1", int port = 0) {
        const int bound = port == 0 ? server_.bind_to_any_port(host) : (server_.bind_to_port(host, port) ? port : -1);
        if (bound < 0) throw Error(ErrorCode::StorageFailure, "cannot bind " + host + ":" + std::to_string(port));
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
        return bound;
    }

    void stop() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }

    ~Service() { stop(); }

    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

private:
    template <typename Fn>
    static void guarded(httplib::Response& res, Fn&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            res.status = http_status(e.code());
            res.set_content(json{{"error", std::string(to_string(e.code()))}, {"message", e.what()}}.dump(),
                            "application/json");
        } catch (const json::exception& e) {
            res.status = 400;
            res.set_content(json{{"error", "BadRequest"}, {"message", e.what()}}.dump(), "application/json");
        } catch (const std::exception& e) {
            res.status = 500;
            res.set_content(json{{"error", "Internal"}, {"message", e.what()}}.dump(), "application/json");
        }
    }

    static std::string param(const httplib::Request& req, const std::string& key,
                             const std::string& fallback = {}) {
        return req.has_param(key) ? req.get_param_value(key) : fallback;
    }

    static bool flag(const httplib::Request& req, const std::string& key) {
        const auto v = param(req, key);
        return v == "1" || v == "true";
    }

    static AnalyzeOptions analyze_options(const httplib::Request& req) {
        AnalyzeOptions options;
        options.group_by = GroupBy::parse(param(req, "group_by", "session,mode,type"));
        const std::string sizes = param(req, "set_size");
        std::size_t start = 0;
        while (start < sizes.size()) {
            std::size_t comma = sizes.find(',', start);
            if (comma == std::string::npos) comma = sizes.size();
            auto v = detail::parse_int<int>(detail::trim(std::string_view(sizes).substr(start, comma - start)));
            if (!v) throw Error(ErrorCode::DomainError, "bad set_size");
            options.set_sizes.push_back(*v);
            start = comma + 1;
        }
        options.exact_chance = flag(req, "exact_chance");
        options.include_flagged = flag(req, "include_flagged");
        return options;
    }

    static std::optional<Timestamp> date_param(const httplib::Request& req, const std::string& key,
                                               bool end_of_day) {
        const std::string v = param(req, key);
        if (v.empty()) return std::nullopt;
        auto t = parse_iso(v);
        if (!t) throw Error(ErrorCode::DomainError, "bad date '" + v + "'");
        if (end_of_day && v.size() == 10) *t += std::chrono::days{1} - std::chrono::milliseconds{1};
        return t;
    }

    std::shared_ptr<SessionHandle> find_session(const std::string& id) {
        std::lock_guard lock(sessions_mutex_);
        auto it = sessions_.find(id);
        if (it == sessions_.end()) throw Error(ErrorCode::NoData, "unknown session " + id);
        return it->second;
    }

    void register_routes() {
        server_.Post("/api/v1/logs", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const json body = json::parse(req.body);
                IngestMetadata meta;
                meta.subject = body.value("subject", "");
                meta.experimenter = body.value("experimenter", "");
                meta.device = body.value("device", "");
                auto format = parse_log_format(body.value("format", "csv"));
                if (!format) throw Error(ErrorCode::UnrecognizedHeader, "format must be csv or txt");
                meta.format = *format;
                // "token" is accepted and ignored; reserved for authenticated deployments.
                const IngestResult r = store_.ingest(body.at("content").get<std::string>(), meta);
                json warnings = json::array();
                for (const auto& w : r.warnings) warnings.push_back(to_json(w));
                res.status = r.duplicate ? 200 : 201;
                res.set_content(json{{"log_id", r.log_id},
                                     {"status", std::string(to_string(r.status))},
                                     {"warnings", warnings},
                                     {"records", r.records},
                                     {"duplicate", r.duplicate}}
                                    .dump(),
                                "application/json");
            });
        });

        server_.Get("/api/v1/logs", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                LogFilter filter;
                if (req.has_param("subject")) filter.subject = param(req, "subject");
                filter.from = date_param(req, "from", false);
                filter.to = date_param(req, "to", true);
                if (req.has_param("mode")) {
                    filter.mode = parse_mode(param(req, "mode"));
                    if (!filter.mode) throw Error(ErrorCode::DomainError, "unknown mode");
                }
                json logs = json::array();
                for (const auto& s : store_.query(filter)) logs.push_back(to_json(s));
                res.set_content(json{{"logs", logs}}.dump(), "application/json");
            });
        });

        server_.Get("/api/v1/reports/accuracy", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const std::string subject = param(req, "subject");
                const StatsReport report = store_.report(subject, analyze_options(req));
                const std::string format = param(req, "format", "md");
                if (format == "json")
                    res.set_content(cells_to_json(report).dump(), "application/json");
                else if (format == "csv")
                    res.set_content(render_report(report, ReportFormat::Csv), "text/csv");
                else if (format == "md")
                    res.set_content(render_report(report, ReportFormat::Markdown), "text/markdown");
                else
                    throw Error(ErrorCode::DomainError, "format must be md, csv or json");
            });
        });

        server_.Get("/api/v1/reports/correlation", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                LogFilter filter;
                filter.subject = param(req, "subject");
                const auto logs = store_.load(filter);
                if (logs.empty()) throw Error(ErrorCode::NoData, "no logs for subject '" + *filter.subject + "'");
                const CorrelationResult c = correlate(logs, flag(req, "include_flagged"));
                if (param(req, "format", "json") == "csv")
                    res.set_content(render_correlation_csv(c.pairs, c.report), "text/csv");
                else
                    res.set_content(to_json(c).dump(), "application/json");
            });
        });

        server_.Post("/api/v1/session", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const json body = req.body.empty() ? json::object() : json::parse(req.body);
                SessionInfo info;
                info.learner = body.value("learner", info.learner);
                info.trainer = body.value("trainer", info.trainer);
                info.seed = body.contains("seed") ? body.at("seed").get<std::uint64_t>() : entropy_seed();
                GameConfig config = game_config_from_json(body.value("config", json::object()));
                auto handle = std::make_shared<SessionHandle>();
                handle->session = std::make_unique<Session>(std::move(config), info);
                std::string id;
                {
                    std::lock_guard lock(sessions_mutex_);
                    id = "s" + std::to_string(++session_counter_);
                    sessions_.emplace(id, handle);
                }
                res.status = 201;
                res.set_content(json{{"session_id", id},
                                     {"seed", info.seed},
                                     {"state", to_json(handle->session->snapshot())}}
                                    .dump(),
                                "application/json");
            });
        });

        server_.Post(R"(/api/v1/session/([^/]+)/input)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                auto handle = find_session(req.matches[1]);
                const json body = json::parse(req.body);
                const UserInput in = user_input_from_json(body);
                Timestamp now = clock_();
                if (body.contains("timestamp")) {
                    auto t = parse_iso(body.at("timestamp").get<std::string>());
                    if (!t) throw Error(ErrorCode::InvalidTiming, "bad timestamp");
                    now = *t;
                }
                std::lock_guard lock(handle->mutex);
                const StepOutcome out = handle->session->step(in, now);
                json events = json::array();
                for (const auto& e : out.events) events.push_back(to_json(e));
                json reply = {{"state", to_json(out.state)}, {"events", events}};
                reply["record"] = out.record ? json(format_record_csv(*out.record)) : json();
                res.set_content(reply.dump(), "application/json");
            });
        });

        server_.Get(R"(/api/v1/session/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                auto handle = find_session(req.matches[1]);
                std::lock_guard lock(handle->mutex);
                res.set_content(json{{"seed", handle->session->seed()},
                                     {"state", to_json(handle->session->snapshot())}}
                                    .dump(),
                                "application/json");
            });
        });

        // Text stream, one `timestamp kind word` line per event. Readers pass
        // the cursor from X-Next-Cursor back as `since`; `wait_ms` long-polls.
        server_.Get(R"(/api/v1/session/([^/]+)/events)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                auto handle = find_session(req.matches[1]);
                const auto since = detail::parse_int<std::size_t>(param(req, "since", "0"));
                const auto wait = detail::parse_int<long>(param(req, "wait_ms", "0"));
                if (!since || !wait || *wait < 0) throw Error(ErrorCode::DomainError, "bad since/wait_ms");
                const EventLog& log = handle->session->events();
                const auto events = *wait > 0
                                        ? log.wait_since(*since, std::chrono::milliseconds{std::min(*wait, 30000L)})
                                        : log.read_since(*since);
                std::string body;
                for (const auto& e : events) body += serialize(e) + "\n";
                res.set_header("X-Next-Cursor", std::to_string(*since + events.size()));
                res.set_content(body, "text/plain");
            });
        });

        server_.Get(R"(/api/v1/session/([^/]+)/log)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                auto handle = find_session(req.matches[1]);
                std::lock_guard lock(handle->mutex);
                if (param(req, "format", "csv") == "txt")
                    res.set_content(handle->session->log_txt(), "text/plain");
                else
                    res.set_content(handle->session->log_csv(), "text/csv");
            });
        });
    }

    LogStore& store_;
    Clock clock_;
    httplib::Server server_;
    std::thread thread_;
    std::mutex sessions_mutex_;
    std::map<std::string, std::shared_ptr<SessionHandle>> sessions_;
    std::uint64_t session_counter_ = 0;
};

} // namespace numerosity
