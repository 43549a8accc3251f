#include "numerosity/binomial.hpp"
#include "numerosity/repository.hpp"
#include "numerosity/service.hpp"
#include "numerosity/simulator.hpp"
#include "numerosity/stats.hpp"
#include "numerosity/trial_log.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace numerosity;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

LogFormat format_for(const std::string& path) {
    return path.size() >= 4 && path.compare(path.size() - 4, 4, ".txt") == 0 ? LogFormat::Txt
                                                                              : LogFormat::Csv;
}

std::vector<LogInput> load_logs(const std::vector<std::string>& paths) {
    std::vector<LogInput> logs;
    for (const auto& path : paths) {
        LogInput in{path, parse_log(read_file(path), format_for(path), ParseOptions{true})};
        for (const auto& w : in.log.warnings)
            std::cerr << path << ":" << w.line_no << ": warning: " << w.message << "\n";
        logs.push_back(std::move(in));
    }
    return logs;
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(std::stoi(item));
    return out;
}

struct ModelArgs {
    std::string model = "uniform";
    std::string table = "subject1";
    double slope = -6.0;
    double intercept = 6.0;

    void add_to(CLI::App* app) {
        app->add_option("--model", model, "uniform | perfect | ratio-table | ratio-logistic")
            ->check(CLI::IsMember({"uniform", "perfect", "ratio-table", "ratio-logistic"}));
        app->add_option("--table", table, "ratio-table accuracies: subject1 | subject2")
            ->check(CLI::IsMember({"subject1", "subject2"}));
        app->add_option("--slope", slope, "ratio-logistic slope");
        app->add_option("--intercept", intercept, "ratio-logistic intercept");
    }

    SubjectModel build() const {
        if (model == "perfect") return model::Perfect{};
        if (model == "ratio-table")
            return table == "subject2" ? model::RatioTable::subject_two() : model::RatioTable::subject_one();
        if (model == "ratio-logistic") return model::RatioLogistic{slope, intercept};
        return model::UniformRandom{};
    }
};

httplib::Server* g_server = nullptr;

void on_signal(int) {
    if (g_server) g_server->stop();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Forced-choice quantity discrimination: log analysis, simulation and repository service"};
    app.require_subcommand(1);

    // analyze
    std::vector<std::string> analyze_files;
    std::string subject, group_by = "session,mode,type", report_format = "md";
    std::vector<int> set_sizes;
    bool exact_chance = false, include_flagged = false;
    auto* analyze = app.add_subcommand("analyze", "Accuracy and binomial p-values per session and display mode");
    analyze->add_option("logs", analyze_files, "log files (.csv or .txt)")->required()->check(CLI::ExistingFile);
    analyze->add_option("--subject", subject, "subject name shown in the report");
    analyze->add_option("--group-by", group_by, "any of session,mode,type");
    analyze->add_option("--set-size", set_sizes, "restrict to these set sizes")->delimiter(',');
    analyze->add_option("--format", report_format, "md | csv")->check(CLI::IsMember({"md", "csv"}));
    analyze->add_flag("--exact-chance", exact_chance, "use 1/2, 1/3, 1/4 instead of 0.5, 0.33, 0.25");
    analyze->add_flag("--include-flagged", include_flagged, "keep records whose correction contradicts the values");

    // correlate
    std::vector<std::string> correlate_files;
    std::string domain_spec = "1,2,3,4,5";
    auto* corr = app.add_subcommand("correlate", "Pair table, correlation matrix and scatter series as CSV");
    corr->add_option("logs", correlate_files, "log files (.csv or .txt)")->required()->check(CLI::ExistingFile);
    corr->add_option("--domain", domain_spec, "value domain, comma separated");
    corr->add_flag("--include-flagged", include_flagged, "keep flagged records");

    // simulate
    ModelArgs sim_model;
    int trials = 20, games = 5, sim_set_size = 2;
    std::uint64_t seed = 1;
    std::string out_path, mode_name = "dice", learner = "Subject", trainer = "Experimenter";
    std::string sim_format = "csv", start = "2022-05-19 17:02:00";
    auto* sim = app.add_subcommand("simulate", "Write a synthetic session log");
    sim_model.add_to(sim);
    sim->add_option("--trials", trials, "trials per game")->check(CLI::PositiveNumber);
    sim->add_option("--games", games, "number of games")->check(CLI::PositiveNumber);
    sim->add_option("--seed", seed, "random seed");
    sim->add_option("--set-size", sim_set_size, "values per trial")->check(CLI::Range(2, 5));
    sim->add_option("--mode", mode_name, "dice | heap | rect | disc | cycle")
        ->check(CLI::IsMember({"dice", "heap", "rect", "disc", "cycle"}));
    sim->add_option("--learner", learner, "Learner column");
    sim->add_option("--trainer", trainer, "Trainer column");
    sim->add_option("--start", start, "first stimulus time, YYYY-MM-DD HH:MM:SS");
    sim->add_option("--format", sim_format, "csv | txt")->check(CLI::IsMember({"csv", "txt"}));
    sim->add_option("--out", out_path, "output file (stdout when omitted)");

    // power
    ModelArgs power_model;
    std::vector<std::int64_t> grid{50, 100, 200};
    double alpha = 0.05;
    std::size_t replicates = 1000;
    int power_set_size = 2;
    auto* power = app.add_subcommand("power", "Detection rate of the binomial test by number of trials");
    power_model.add_to(power);
    power->add_option("--grid", grid, "numbers of trials")->delimiter(',');
    power->add_option("--alpha", alpha, "significance level");
    power->add_option("--replicates", replicates, "simulated sessions per grid point");
    power->add_option("--seed", seed, "random seed");
    power->add_option("--set-size", power_set_size, "values per trial")->check(CLI::Range(2, 5));
    power->add_flag("--exact-chance", exact_chance, "use 1/set size as chance level");

    // serve
    int port = 8080;
    std::string host = "127.0.0.1", store_dir = "numerosity-store";
    auto* serve = app.add_subcommand("serve", "Run the log repository and session service");
    serve->add_option("--port", port, "TCP port");
    serve->add_option("--host", host, "bind address");
    serve->add_option("--store", store_dir, "store directory")->envname("NUMEROSITY_STORE");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*analyze) {
            AnalyzeOptions options;
            options.subject = subject;
            options.group_by = GroupBy::parse(group_by);
            options.set_sizes = set_sizes;
            options.exact_chance = exact_chance;
            options.include_flagged = include_flagged;
            const auto report = aggregate(load_logs(analyze_files), options);
            std::cout << render_report(report, report_format == "csv" ? ReportFormat::Csv : ReportFormat::Markdown);
        } else if (*corr) {
            const auto result = correlate(load_logs(correlate_files), include_flagged,
                                          ValueDomain(parse_int_list(domain_spec)));
            std::cout << render_correlation_csv(result.pairs, result.report);
        } else if (*sim) {
            GameConfig config;
            config.trials_per_game = trials;
            config.set_size = sim_set_size;
            SimulationOptions options;
            options.seed = seed;
            options.learner = learner;
            options.trainer = trainer;
            options.format = sim_format == "txt" ? LogFormat::Txt : LogFormat::Csv;
            options.cycle_modes = mode_name == "cycle";
            config.mode = options.cycle_modes ? DisplayMode::Dice : *parse_mode(mode_name);
            auto when = parse_iso(start);
            if (!when) throw Error(ErrorCode::InvalidConfig, "bad --start");
            options.start = *when;
            const auto result = simulate_session(sim_model.build(), config, games, options);
            if (out_path.empty()) {
                std::cout << result.log;
            } else {
                std::ofstream(out_path, std::ios::binary) << result.log;
                nlohmann::json meta(result.metadata);
                std::ofstream(out_path + ".meta.json") << meta.dump(2) << "\n";
            }
            for (const auto& [key, value] : result.metadata) std::cerr << key << ": " << value << "\n";
        } else if (*power) {
            GameConfig config;
            config.set_size = power_set_size;
            const auto points = power_analysis(power_model.build(), config, grid, alpha, replicates, seed, exact_chance);
            std::cout << "n_trials,replicates,detections,rate,alpha,seed\n";
            for (const auto& p : points)
                std::cout << p.n_trials << "," << p.replicates << "," << p.detections << "," << p.rate << ","
                          << alpha << "," << seed << "\n";
        } else if (*serve) {
            LogStore store(store_dir);
            Service service(store);
            g_server = &service.server();
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::cerr << "serving " << store.size() << " logs from " << store_dir << " on " << host << ":" << port
                      << "\n";
            if (!service.server().listen(host, port)) {
                std::cerr << "cannot listen on " << host << ":" << port << "\n";
                return 1;
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
