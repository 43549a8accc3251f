// Acceptance checks. Each criterion prints one PASS/FAIL line; pass a
// criterion name to run only that one. Tolerances are fixed below.

#include "numerosity/binomial.hpp"
#include "numerosity/service.hpp"
#include "numerosity/simulator.hpp"
#include "numerosity/stats.hpp"
#include "numerosity/uniformity.hpp"

#include "fixtures.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <regex>
#include <set>

using namespace numerosity;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) pass = false;
        if (!detail.empty()) detail += "; ";
        detail += (ok ? "" : "NOT ") + what;
    }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string sci(double v, int digits = 4) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*e", digits, v);
    return buf;
}

/// Rounds to `sig` significant figures.
double round_sig(double v, int sig) {
    const double scale = std::pow(10.0, sig - 1 - std::floor(std::log10(std::abs(v))));
    return std::round(v * scale) / scale;
}

// Tolerances.
constexpr double kTwoSigFigs = 2;
constexpr double kOracleRelErr = 1e-12;
constexpr double kOrderOfMagnitude = 1.0;  // |log10(got / printed)|
constexpr double kPearsonTol = 0.02;
constexpr double kAlpha = 0.01;
constexpr double kFalsePositiveTol = 0.02;

Verdict binomial_fixture_1() {
    Verdict v;
    const auto start = Clock::now();
    const double p = binomial_tail(993, 1214, 0.5);
    const double elapsed = seconds_since(start);
    // 1.95e-117 is printed to three figures; agreement means |p - 1.95e-117|
    // within half a unit of the last printed digit.
    v.require(std::abs(p - 1.95e-117) <= 0.005e-117, "p=" + sci(p) + " matches 1.95e-117 at printed precision");
    v.require(elapsed < 1.0, "runtime " + sci(elapsed, 2) + " s < 1 s");
    return v;
}

Verdict binomial_fixture_2() {
    Verdict v;
    const double p303 = binomial_tail(303, 409, 0.5);
    const double p383 = binomial_tail(383, 409, 0.5);
    const double oracle = fixtures::exact_binomial_tail(303, 409, 1, 2);
    const double rel = std::abs(p303 - oracle) / oracle;
    v.require(rel <= kOracleRelErr, "k=303 p=" + sci(p303) + " rel err vs oracle " + sci(rel, 1) + " <= 1e-12");
    v.require(round_sig(p303, kTwoSigFigs) == round_sig(2.24e-23, kTwoSigFigs), "2 sig figs agree with 2.24e-23");
    const bool k303 = std::abs(std::log10(p303 / 2.24e-23)) < std::abs(std::log10(p383 / 2.24e-23));
    v.require(k303, "printed p reproduced by k=303 (k=383 gives " + sci(p383, 2) + ")");
    return v;
}

Verdict binomial_fixture_3() {
    Verdict v;
    const auto k = static_cast<std::int64_t>(std::llround(0.70 * 588));
    const double p = binomial_tail(k, 588, 0.33);
    const double gap = std::abs(std::log10(p / 3.479e-77));
    v.require(gap <= kOrderOfMagnitude, "k=" + std::to_string(k) + " p=" + sci(p) + " within one order of 3.479e-77 (gap " +
                                            sci(gap, 2) + " decades)");
    // Which k would reproduce the printed value.
    std::int64_t best_k = 0;
    double best_gap = 1e9;
    for (std::int64_t kk = 0; kk <= 588; ++kk) {
        const double g = std::abs(std::log10(binomial_tail(kk, 588, 1.0 / 3.0) / 3.479e-77));
        if (g < best_gap) best_gap = g, best_k = kk;
    }
    v.detail += "; printed value matches k=" + std::to_string(best_k) + " at p0=1/3 (" +
                sci(binomial_tail(best_k, 588, 1.0 / 3.0)) + ")";
    return v;
}

Verdict binomial_fixture_4() {
    Verdict v;
    const auto k = static_cast<std::int64_t>(std::llround(0.62 * 218));
    const double p = binomial_tail(k, 218, 0.25);
    const double gap = std::abs(std::log10(p / 2.549e-31));
    v.require(gap <= kOrderOfMagnitude, "k=" + std::to_string(k) + " p=" + sci(p) + " within one order of 2.549e-31");
    v.detail += "; k=136 gives " + sci(binomial_tail(136, 218, 0.25)) + ", so the printed 136 is the success count";
    return v;
}

Verdict oracle_suite() {
    Verdict v;
    const auto start = Clock::now();
    const struct {
        double p;
        long num, den;
    } chances[] = {{0.5, 1, 2}, {0.33, 33, 100}, {0.25, 1, 4}};
    double worst = 0.0;
    std::size_t cases = 0;
    for (const auto& c : chances)
        for (long n = 0; n <= 50; ++n)
            for (long k = 0; k <= n; ++k, ++cases) {
                const double exact = fixtures::exact_binomial_tail(k, n, c.num, c.den);
                worst = std::max(worst, std::abs(binomial_tail(k, n, c.p) - exact) / exact);
            }
    const double elapsed = seconds_since(start);
    v.require(worst <= kOracleRelErr, std::to_string(cases) + " cases, max rel err " + sci(worst, 2) + " <= 1e-12");
    v.require(elapsed < 30.0, "runtime " + sci(elapsed, 2) + " s < 30 s");
    return v;
}

Verdict pearson_fixtures() {
    Verdict v;
    const auto start = Clock::now();
    auto report = [](const std::vector<int>& percents) {
        auto rows = pair_rows(ValueDomain{});
        for (std::size_t i = 0; i < rows.size(); ++i) {
            rows[i].n = 100;
            rows[i].k = static_cast<std::size_t>(percents[i]);
            rows[i].accuracy = percents[i] / 100.0;
        }
        return correlation_report(rows);
    };
    const auto one = report({81, 90, 93, 94, 82, 81, 96, 67, 73, 55});
    const auto two = report({69, 70, 78, 94, 57, 68, 76, 45, 70, 71});
    auto check = [&](const char* what, double got, double want) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "%s r=%.4f vs %.2f", what, got, want);
        v.require(std::abs(got - want) <= kPearsonTol, buf);
    };
    check("subject 1 accuracy-ratio", one.at("Accuracy", "Ratio"), -0.90);
    check("subject 1 accuracy-difference", one.at("Accuracy", "Difference"), 0.74);
    check("subject 2 accuracy-ratio", two.at("Accuracy", "Ratio"), -0.74);
    check("subject 2 accuracy-difference", two.at("Accuracy", "Difference"), 0.52);
    v.require(seconds_since(start) < 1.0, "runtime < 1 s");
    return v;
}

Verdict log_codec() {
    Verdict v;
    v.require(format_header_csv() ==
                  "Test no, Test Name, Learner, Trainer, C_0, C_1, C_2, C_3, C_4, Value selected , Correction , Date, "
                  "Answering Time (ms), Other Parameters",
              "header byte-for-byte");

    const ParsedLog sample = parse_log(fixtures::read_data("short_excerpt.csv"));
    struct Expect {
        long no;
        DisplayMode mode;
        std::vector<int> values;
        int chosen;
        bool correct;
    };
    const Expect expected[] = {{1, DisplayMode::Dice, {1, 4}, 4, true},
                               {81, DisplayMode::Rect, {4, 2, 3}, 3, false},
                               {180, DisplayMode::Heap, {3, 2, 1}, 2, false}};
    bool samples_ok = sample.records.size() == 3;
    for (std::size_t i = 0; samples_ok && i < 3; ++i) {
        const auto& r = sample.records[i];
        const auto& e = expected[i];
        samples_ok = r.test_no == e.no && r.test_name == e.mode && r.values() == e.values &&
                     r.value_selected == e.chosen && r.correction == e.correct;
    }
    v.require(samples_ok, "three sample lines parse to the published records");
    v.require(samples_ok && parse_log(format_log_csv(sample.records)).records == sample.records,
              "sample lines round-trip");

    std::mt19937_64 rng(20220519);
    std::uniform_int_distribution<int> size(2, 5), value(1, 10), mode(0, 3), ms(0, 99999), len(0, 60);
    std::uniform_int_distribution<long long> offset(0, 10LL * 365 * 24 * 3600 * 1000);
    const std::string alphabet = "abcdefXYZ 0123456789,.[]()";
    std::uniform_int_distribution<std::size_t> ch(0, alphabet.size() - 1);
    std::vector<TrialRecord> records;
    for (long i = 1; i <= 10000; ++i) {
        std::vector<int> values;
        const int n = size(rng);
        while (static_cast<int>(values.size()) < n) {
            const int x = value(rng);
            if (std::find(values.begin(), values.end(), x) == values.end()) values.push_back(x);
        }
        std::uniform_int_distribution<std::size_t> slot(0, values.size() - 1);
        TrialRecord r = fixtures::make_record(i, kAllModes[static_cast<std::size_t>(mode(rng))], values,
                                              values[slot(rng)],
                                              make_timestamp({2018, 1, 1, 0, 0, 0, 0}) + std::chrono::milliseconds{offset(rng)},
                                              ms(rng));
        std::string other;
        for (int c = len(rng); c > 0; --c) other += alphabet[ch(rng)];
        r.other_parameters = other;
        records.push_back(std::move(r));
    }
    v.require(parse_log(format_log_csv(records)).records == records, "10000 random records round-trip as csv");
    v.require(parse_log(format_log_txt(records), LogFormat::Txt).records == records,
              "10000 random records round-trip as txt");
    return v;
}

Verdict generator_uniformity() {
    Verdict v;
    GameConfig config;
    Rng rng(1);
    std::map<std::pair<int, int>, std::size_t> pairs;
    std::array<std::size_t, 2> max_slot{};
    std::size_t repeated = 0;
    for (int i = 0; i < 100000; ++i) {
        const TrialSpec t = generate_trial(config, rng);
        if (t.values[0] == t.values[1]) ++repeated;
        ++pairs[{std::min(t.values[0], t.values[1]), std::max(t.values[0], t.values[1])}];
        ++max_slot[t.correct_index];
    }
    std::vector<std::size_t> counts;
    for (const auto& [_, n] : pairs) counts.push_back(n);
    const auto pair_fit = chi_square_uniform(counts);
    const auto slot_fit = chi_square_uniform(max_slot);
    v.require(pairs.size() == 10, std::to_string(pairs.size()) + " distinct pairs");
    v.require(pair_fit.p_value > kAlpha, "pairs chi2=" + sci(pair_fit.statistic, 3) + " p=" + sci(pair_fit.p_value, 3));
    v.require(slot_fit.p_value > kAlpha, "max slot chi2=" + sci(slot_fit.statistic, 3) + " p=" + sci(slot_fit.p_value, 3));
    v.require(repeated == 0, std::to_string(repeated) + " repeated-value trials");
    return v;
}

Verdict masking() {
    Verdict v;
    std::size_t checked = 0, leaks = 0;
    const std::regex digits("[0-9]+");
    for (std::uint64_t s = 0; s < 1000; ++s) {
        GameConfig config;
        config.mode = kAllModes[s % 4];
        config.set_size = 2 + static_cast<int>(s % 3);
        SimulationOptions options;
        options.seed = s;
        options.cycle_modes = s % 2 == 1;
        auto observer = [&](const SessionState&, const StepOutcome& out) {
            // Every event emitted here precedes the answer to the trial left pending.
            if (!out.state.pending) return;
            std::set<std::string> secret;
            for (int x : out.state.pending->spec.values) secret.insert(std::to_string(x));
            secret.insert(std::to_string(out.state.pending->spec.correct_index));
            for (const auto& e : out.events) {
                const std::string line = serialize(e);
                const std::string payload = line.substr(line.find(' ') + 1);  // drop the clock
                ++checked;
                for (std::sregex_iterator it(payload.begin(), payload.end(), digits), end; it != end; ++it)
                    if (secret.count(it->str())) ++leaks;
            }
        };
        simulate_session(model::UniformRandom{}, config, 2, options, observer);
    }
    v.require(checked > 0 && leaks == 0,
              std::to_string(checked) + " pre-answer events over 1000 sessions, " + std::to_string(leaks) + " leaks");
    return v;
}

Verdict pipeline() {
    Verdict v;
    const auto ps = simulate_p_values(model::UniformRandom{}, GameConfig{}, 10000, 1000, 31337);
    const auto ks = ks_uniform(ps);
    v.require(ks.p_value > kAlpha, "uniform model KS D=" + sci(ks.statistic, 3) + " p=" + sci(ks.p_value, 3));
    const double fp = static_cast<double>(std::count_if(ps.begin(), ps.end(), [](double p) { return p < 0.05; })) /
                      static_cast<double>(ps.size());
    v.require(std::abs(fp - 0.05) <= kFalsePositiveTol, "false-positive rate " + sci(fp, 3) + " at alpha 0.05");
    const double perfect = simulate_p_values(model::Perfect{}, GameConfig{}, 100, 1, 1).front();
    v.require(perfect < 1e-25, "perfect model n=100 p=" + sci(perfect, 3));
    return v;
}

std::string run_capture(const std::string& command) {
    std::string out;
    FILE* pipe = ::popen(command.c_str(), "r");
    if (!pipe) return out;
    char buf[4096];
    for (std::size_t n; (n = std::fread(buf, 1, sizeof buf, pipe)) > 0;) out.append(buf, n);
    ::pclose(pipe);
    return out;
}

Verdict service_equivalence() {
    Verdict v;
    const fs::path dir = fs::temp_directory_path() / ("numerosity-acceptance-" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir / "corpus");

    const std::string cli = NUMEROSITY_CLI;
    const char* models[] = {"uniform", "perfect", "ratio-table", "ratio-logistic"};
    std::vector<std::string> files;
    for (int i = 0; i < 8; ++i) {
        const std::string file = (dir / "corpus" / ("session" + std::to_string(i) + ".csv")).string();
        char start[32];
        std::snprintf(start, sizeof start, "2022-05-%02d %02d:05:00", 10 + i, 9 + i);
        const std::string mode = i % 3 == 0 ? "cycle" : std::string(wire_name(kAllModes[static_cast<std::size_t>(i % 4)]));
        const std::string cmd = cli + " simulate --model " + models[i % 4] + " --trials 20 --games " +
                                std::to_string(2 + i % 3) + " --seed " + std::to_string(100 + i) + " --mode " + mode +
                                " --set-size " + std::to_string(i < 6 ? 2 : 3) + " --start \"" + start +
                                "\" --out " + file + " 2>/dev/null";
        if (std::system(cmd.c_str()) != 0) v.require(false, "simulate " + file);
        files.push_back(file);
    }

    LogStore store(dir / "store");
    Service service(store);
    const int port = service.start();
    httplib::Client client("127.0.0.1", port);
    std::string first_id;
    bool uploads_ok = true;
    for (const auto& file : files) {
        json body = {{"subject", "Subject"}, {"experimenter", "Experimenter"}, {"device", "sim"},
                     {"format", "csv"},      {"content", fixtures::read_file(file)}};
        auto r = client.Post("/api/v1/logs", body.dump(), "application/json");
        uploads_ok = uploads_ok && r && r->status == 201;
        if (r && first_id.empty()) first_id = json::parse(r->body).value("log_id", "");
    }
    v.require(uploads_ok, std::to_string(files.size()) + " simulator logs ingested");

    std::string joined;
    for (const auto& f : files) joined += " " + f;
    for (const char* format : {"md", "csv"}) {
        auto r = client.Get(std::string("/api/v1/reports/accuracy?subject=Subject&format=") + format);
        const std::string offline = run_capture(cli + " analyze --subject Subject --format " + format + joined);
        v.require(r && r->status == 200 && !offline.empty() && r->body == offline,
                  std::string(format) + " report byte-identical to CLI (" + std::to_string(offline.size()) + " bytes)");
    }
    auto corr = client.Get("/api/v1/reports/correlation?subject=Subject&format=csv");
    v.require(corr && corr->body == run_capture(cli + " correlate" + joined), "correlation csv identical to CLI");

    const auto before = store.size();
    json dup = {{"subject", "Subject"}, {"format", "csv"}, {"content", fixtures::read_file(files[0])}};
    auto again = client.Post("/api/v1/logs", dup.dump(), "application/json");
    v.require(again && again->status == 200 && json::parse(again->body).value("log_id", "") == first_id &&
                  store.size() == before,
              "duplicate upload idempotent");
    service.stop();
    fs::remove_all(dir);
    return v;
}

const std::vector<std::pair<std::string, std::function<Verdict()>>> kCriteria = {
    {"binomial-fixture-1", binomial_fixture_1},
    {"binomial-fixture-2", binomial_fixture_2},
    {"binomial-fixture-3", binomial_fixture_3},
    {"binomial-fixture-4", binomial_fixture_4},
    {"oracle-suite", oracle_suite},
    {"pearson-fixtures", pearson_fixtures},
    {"log-codec", log_codec},
    {"generator-uniformity", generator_uniformity},
    {"masking", masking},
    {"pipeline", pipeline},
    {"service-equivalence", service_equivalence},
};

} // namespace

int main(int argc, char** argv) {
    const std::string only = argc > 1 ? argv[1] : "";
    int failures = 0;
    bool matched = false;
    for (const auto& [name, check] : kCriteria) {
        if (!only.empty() && only != name) continue;
        matched = true;
        Verdict v;
        try {
            v = check();
        } catch (const std::exception& e) {
            v.pass = false;
            v.detail += std::string("exception: ") + e.what();
        }
        std::cout << (v.pass ? "PASS " : "FAIL ") << name << ": " << v.detail << std::endl;
        failures += v.pass ? 0 : 1;
    }
    if (!matched) {
        std::cerr << "unknown criterion " << only << "\n";
        return 2;
    }
    return failures == 0 ? 0 : 1;
}
