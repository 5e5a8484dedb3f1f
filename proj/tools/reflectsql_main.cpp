#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>

#include "reflectsql/config.hpp"
#include "reflectsql/engine.hpp"
#include "reflectsql/replay.hpp"
#include "reflectsql/service.hpp"
#include "reflectsql/sql_matcher.hpp"

using namespace reflectsql;

namespace {

std::string fmt_ts(double ts) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", ts);
    return buf;
}

std::string join(const std::vector<std::string>& parts, const char* sep) {
    std::string out;
    for (const auto& p : parts) {
        if (!out.empty()) out += sep;
        out += p;
    }
    return out;
}

std::vector<double> parse_numbers(const std::string& csv, const char* what) {
    std::vector<double> out;
    std::stringstream in(csv);
    std::string item;
    while (std::getline(in, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError(std::string(what) + " expects comma-separated numbers, got \"" +
                              csv + "\"");
        }
    }
    if (out.empty())
        throw ConfigError(std::string(what) + " expects comma-separated numbers, got \"" + csv +
                          "\"");
    return out;
}

std::string describe(const TriggerMatch& match) {
    struct Visitor {
        std::string operator()(const DatatypeComparisonMatch& m) const {
            return "table=" + m.table + " column=" + m.column + " new_type=" + m.new_datatype;
        }
        std::string operator()(const SingleColumnIndexMatch& m) const {
            return "index=" + m.index + " table=" + m.table + " column=" + m.column;
        }
        std::string operator()(const CompositeIndexMatch& m) const {
            return "index=" + m.index + " table=" + m.table + " columns=" + join(m.columns, ",");
        }
        std::string operator()(const InnerJoinSelectMatch& m) const {
            return "tables=" + join(m.tables, ",") + " joins=" + std::to_string(m.join_count);
        }
        std::string operator()(const CreateTableAsJoinMatch& m) const {
            return "table=" + m.table + " tables=" + join(m.tables, ",") +
                   " joins=" + std::to_string(m.join_count);
        }
    };
    return std::visit(Visitor{}, match);
}

int run_classify(const std::string& sql) {
    bool any = false;
    for (const std::string& stmt : split_statements(sql)) {
        for (const TriggerMatch& m : classify_all(stmt)) {
            std::cout << to_string(intervention_type(m)) << " " << describe(m) << "\n";
            any = true;
        }
    }
    if (!any) std::cout << "no-match\n";
    return 0;
}

int run_replay(const std::string& log_path, double tau, bool no_schedule,
               const std::string& buckets, const std::string& clock, const std::string& format) {
    ReplayConfig cfg;
    cfg.tau_s = tau;
    cfg.scheduling_enabled = !no_schedule;
    cfg.bucket_edges = parse_numbers(buckets, "--buckets");
    if (clock == "head_trigger") cfg.clock = SpacingClock::HeadTrigger;
    else if (clock != "last_shown")
        throw ConfigError("--clock must be last_shown or head_trigger");

    const ReplayReport report = replay(load_log(log_path), cfg);
    if (format == "json") std::cout << report_json(report, cfg);
    else if (format == "csv") std::cout << report_csv(report, cfg);
    else if (format == "table") std::cout << report_table(report, cfg);
    else throw ConfigError("--format must be table, json or csv");
    return 0;
}

int run_sweep(const std::string& log_path, const std::string& taus, const std::string& buckets,
              const std::string& format) {
    ReplayConfig base;
    base.bucket_edges = parse_numbers(buckets, "--buckets");
    const auto sweep = sweep_tau(load_log(log_path), parse_numbers(taus, "--taus"), base);
    if (format == "json") std::cout << sweep_json(sweep, base.bucket_edges);
    else if (format == "csv") std::cout << sweep_csv(sweep, base.bucket_edges);
    else if (format == "table") std::cout << sweep_table(sweep, base.bucket_edges);
    else throw ConfigError("--format must be table, json or csv");
    return 0;
}

struct EngineFlags {
    std::string config_file;
    std::string llm;
    std::string log_dir;
    std::string templates;
    double tau = -1.0;

    EngineConfig resolve() const {
        EngineConfig cfg;
        if (!config_file.empty()) cfg = load_config(config_file);
        if (!llm.empty()) {
            if (llm != "mock" && llm != "live")
                throw ConfigError("--llm must be mock or live, got \"" + llm + "\"");
            cfg.backend = llm;
        }
        if (!log_dir.empty()) cfg.log_dir = log_dir;
        if (!templates.empty()) cfg.templates_dir = templates;
        if (tau >= 0) cfg.scheduler.tau_s = tau;
        return cfg;
    }
};

int run_serve(const EngineFlags& flags, int port) {
    ServiceConfig cfg;
    cfg.port = port;
    cfg.engine = flags.resolve();
    Service service(std::move(cfg));
    std::cout << "serving on 127.0.0.1:" << port << " (backend "
              << service.engine().backend_name() << ")" << std::endl;
    if (!service.run()) {
        std::cerr << "error: cannot listen on port " << port << "\n";
        return 1;
    }
    return 0;
}

void print_reflection(const Reflection& r) {
    std::cout << r.message << "\n";
    if (r.origin == ReflectionOrigin::StaticFallback) std::cout << "(static fallback)\n";
}

int run_session(const EngineFlags& flags, double speed) {
    if (speed < 0) throw ConfigError("--speed must not be negative");
    Engine engine(flags.resolve());
    const std::string session_id = "local-1";
    engine.open_session(session_id);

    std::cout << "interactive session (backend " << engine.backend_name()
              << "); SQL per line, \\task N advances, \\wait S skips ahead, quit exits\n";

    const auto started = std::chrono::steady_clock::now();
    double waited = 0.0;
    double last_ts = 0.0;
    const auto now_ts = [&] {
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        // The simulated clock never runs backwards even if speed is 0.
        last_ts = std::max(last_ts, wall * speed + waited);
        return last_ts;
    };

    std::string line;
    while (std::getline(std::cin, line)) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r");
        const std::string text = line.substr(first, last - first + 1);
        if (text == "quit" || text == "exit") break;

        try {
            if (text.rfind("\\task", 0) == 0) {
                const int task = std::stoi(text.substr(5));
                const double ts = now_ts();
                const auto flushed = engine.advance_task(session_id, task, ts);
                std::cout << "[t=" << fmt_ts(ts) << "] task " << task << " ("
                          << flushed.size() << " flushed)\n";
                for (const Reflection& r : flushed) print_reflection(r);
                continue;
            }
            if (text.rfind("\\wait", 0) == 0) {
                const double skip = std::stod(text.substr(5));
                if (skip < 0) throw ConfigError("\\wait expects a non-negative number");
                waited += skip;
                const double ts = now_ts();
                if (const auto shown = engine.tick(session_id, ts)) {
                    std::cout << "[t=" << fmt_ts(ts) << "] " << to_string(shown->intervention)
                              << " -> shown\n";
                    print_reflection(*shown);
                } else {
                    std::cout << "[t=" << fmt_ts(ts) << "]\n";
                }
                continue;
            }

            const double ts = now_ts();
            const auto outcomes = engine.process_command(session_id, text, ts);
            if (outcomes.empty()) {
                std::cout << "[t=" << fmt_ts(ts) << "] no-match\n";
                continue;
            }
            for (const TriggerOutcome& out : outcomes) {
                std::cout << "[t=" << fmt_ts(ts) << "] "
                          << to_string(intervention_type(out.match)) << " -> "
                          << to_string(out.decision.action) << "\n";
                if (out.decision.shown) print_reflection(*out.decision.shown);
            }
        } catch (const std::invalid_argument&) {
            std::cout << "directive needs a number: " << text << "\n";
        } catch (const Error& e) {
            std::cout << "error: " << e.what() << "\n";
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"reflection triggers for collaborative SQL optimization sessions"};
    app.require_subcommand(1);

    std::string sql;
    auto* classify_cmd =
        app.add_subcommand("classify", "Print the trigger types one submission raises");
    classify_cmd->add_option("sql", sql, "SQL text (may hold several ;-separated statements)")
        ->required();

    std::string log_path;
    double tau = 300.0;
    bool no_schedule = false;
    std::string buckets = "60,120,300";
    std::string clock = "last_shown";
    std::string format = "table";
    auto* replay_cmd = app.add_subcommand("replay", "Replay an event log and report firings");
    replay_cmd->add_option("--log", log_path, "JSONL event log")->required();
    replay_cmd->add_option("--tau", tau, "Spacing threshold in seconds");
    replay_cmd->add_flag("--no-schedule", no_schedule, "Fire every trigger immediately");
    replay_cmd->add_option("--buckets", buckets, "Histogram edges (comma-separated seconds)");
    replay_cmd->add_option("--clock", clock, "Spacing clock: last_shown or head_trigger");
    replay_cmd->add_option("--format", format, "table, json or csv");

    std::string sweep_log;
    std::string taus = "0,15,60,300";
    std::string sweep_buckets = "60,120,300";
    std::string sweep_format = "table";
    auto* sweep_cmd = app.add_subcommand("sweep", "Replay once per tau and compare histograms");
    sweep_cmd->add_option("--log", sweep_log, "JSONL event log")->required();
    sweep_cmd->add_option("--taus", taus, "Tau values (comma-separated seconds)");
    sweep_cmd->add_option("--buckets", sweep_buckets, "Histogram edges");
    sweep_cmd->add_option("--format", sweep_format, "table, csv or json");

    EngineFlags serve_flags;
    int port = 8080;
    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
    serve_cmd->add_option("--port", port, "Listen port");
    serve_cmd->add_option("--llm", serve_flags.llm, "Completion backend: mock or live");
    serve_cmd->add_option("--log-dir", serve_flags.log_dir, "Event-log directory");
    serve_cmd->add_option("--config", serve_flags.config_file, "Config file");
    serve_cmd->add_option("--tau", serve_flags.tau, "Spacing threshold in seconds");
    serve_cmd->add_option("--templates", serve_flags.templates, "Prompt template directory");

    EngineFlags session_flags;
    double speed = 1.0;
    auto* session_cmd = app.add_subcommand("session", "Interactive single-session loop");
    session_cmd->add_option("--llm", session_flags.llm, "Completion backend: mock or live");
    session_cmd->add_option("--speed", speed, "Simulated seconds per wall second");
    session_cmd->add_option("--config", session_flags.config_file, "Config file");
    session_cmd->add_option("--tau", session_flags.tau, "Spacing threshold in seconds");
    session_cmd->add_option("--templates", session_flags.templates, "Prompt template directory");
    session_cmd->add_option("--log-dir", session_flags.log_dir, "Event-log directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (classify_cmd->parsed()) {
            bool only_space = true;
            for (char c : sql)
                if (!std::isspace(static_cast<unsigned char>(c))) only_space = false;
            if (only_space) {
                std::cerr << "error: classify needs a non-empty SQL argument\n";
                return 2;
            }
            return run_classify(sql);
        }
        if (replay_cmd->parsed())
            return run_replay(log_path, tau, no_schedule, buckets, clock, format);
        if (sweep_cmd->parsed()) return run_sweep(sweep_log, taus, sweep_buckets, sweep_format);
        if (serve_cmd->parsed()) return run_serve(serve_flags, port);
        if (session_cmd->parsed()) return run_session(session_flags, speed);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
