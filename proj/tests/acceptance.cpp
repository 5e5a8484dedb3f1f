// Acceptance gate: one line per criterion, nonzero exit when any fails.
// Each check is self-contained and uses only frozen expected values.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "reflectsql/engine.hpp"
#include "reflectsql/llm_gateway.hpp"
#include "reflectsql/prompt_builder.hpp"
#include "reflectsql/replay.hpp"
#include "reflectsql/scheduler.hpp"
#include "reflectsql/service.hpp"
#include "reflectsql/session_store.hpp"
#include "reflectsql/sql_matcher.hpp"
#include "reflectsql/validator.hpp"
#include "scheduler_reference.hpp"

namespace fs = std::filesystem;
using namespace reflectsql;
using nlohmann::json;

namespace {

int failures = 0;
int skips = 0;

// Runs one criterion, timing it and flattening thrown errors into failures.
void criterion(int number, const std::string& label, double budget_s,
               const std::function<void(std::vector<std::string>&)>& body) {
    std::vector<std::string> problems;
    const auto start = std::chrono::steady_clock::now();
    try {
        body(problems);
    } catch (const std::exception& e) {
        problems.push_back(std::string("unexpected error: ") + e.what());
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (budget_s > 0 && elapsed > budget_s) {
        std::ostringstream msg;
        msg << "took " << elapsed << "s, budget " << budget_s << "s";
        problems.push_back(msg.str());
    }
    if (problems.empty()) {
        std::printf("[PASS] %d: %s (%.2fs)\n", number, label.c_str(), elapsed);
    } else {
        ++failures;
        std::printf("[FAIL] %d: %s\n", number, label.c_str());
        for (const auto& p : problems) std::printf("       - %s\n", p.c_str());
    }
}

void skip(int number, const std::string& label, const std::string& why) {
    ++skips;
    std::printf("[SKIP] %d: %s\n       - %s\n", number, label.c_str(), why.c_str());
}

template <typename T>
void expect_eq(std::vector<std::string>& problems, const T& got, const T& want,
               const std::string& what) {
    if (got != want) {
        std::ostringstream msg;
        msg << what << ": got " << got << ", want " << want;
        problems.push_back(msg.str());
    }
}

void expect(std::vector<std::string>& problems, bool ok, const std::string& what) {
    if (!ok) problems.push_back(what);
}

std::string squeeze_ws(const std::string& text) {
    std::string out;
    bool in_ws = false;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            in_ws = true;
            continue;
        }
        if (in_ws && !out.empty()) out += ' ';
        in_ws = false;
        out += c;
    }
    return out;
}

SqlEvent make_event(std::string session, double ts, std::string sql) {
    SqlEvent ev;
    ev.session_id = std::move(session);
    ev.timestamp = ts;
    ev.raw_sql = std::move(sql);
    return ev;
}

struct TempDir {
    fs::path path;
    TempDir() {
        static std::mt19937_64 rng{std::random_device{}()};
        path = fs::temp_directory_path() / ("reflectsql_accept_" + std::to_string(rng()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

const std::string kResult2Ctas =
    "CREATE TABLE result2 AS (SELECT employees.emp_no, employees.first_name, "
    "employees.last_name, dept_emp_list.dept_name, titles.title FROM employees INNER JOIN "
    "dept_emp_list ON employees.emp_no=dept_emp_list.emp_no INNER JOIN titles ON "
    "dept_emp_list.emp_no=titles.emp_no )";

const std::string kTask2Ctas =
    "CREATE TABLE task2 (SELECT e.*, d.dept_no, d.dept_name, t.title, t.from_date, t.to_date "
    "FROM employees AS e JOIN dept_emp_list AS d ON e.emp_no=d.emp_no JOIN titles AS t ON "
    "t.emp_no=d.emp_no)";

// ---------------------------------------------------------------------------
// 1. Classification goldens.

void check_classification(std::vector<std::string>& problems) {
    const std::vector<std::pair<std::string, InterventionType>> goldens = {
        {"alter table result modify salary INT", InterventionType::DATATYPE_COMPARISON},
        {"CREATE INDEX idx_1 ON result2 (dept_name, title)",
         InterventionType::COMPOSITE_IND_COL_ORDER},
        {"CREATE INDEX title_index ON task2(title)", InterventionType::COMPOSITE_VS_MULTI_SINGLE},
        {"SELECT e.first_name, e.last_name, s.from_date, s.to_date FROM salaries s INNER JOIN "
         "employees e ON s.emp_no = e.emp_no WHERE s.salary > 100000",
         InterventionType::DENORMALIZATION_WHEN},
        {"CREATE TABLE emp_title_dept AS (SELECT e.emp_no, e.first_name, e.last_name, t.title, "
         "d.dept_no FROM employees e INNER JOIN dept_emp_list d ON e.emp_no = d.emp_no INNER "
         "JOIN titles t ON d.emp_no = t.emp_no)",
         InterventionType::TABLE_CHOICE_DENORMALIZATION},
    };
    for (const auto& [sql, want] : goldens) {
        const auto matches = classify_all(sql);
        if (matches.size() != 1) {
            problems.push_back("expected exactly one match for: " + sql);
            continue;
        }
        if (intervention_type(matches[0]) != want)
            problems.push_back("wrong type for: " + sql + " (got " +
                               to_string(intervention_type(matches[0])) + ")");
    }

    const std::vector<std::string> negatives = {
        "SELECT * FROM employees",
        "SELECT emp_no, salary FROM salaries WHERE salary > 100000",
        "SELECT COUNT(*) FROM titles GROUP BY title",
        "SELECT e.emp_no FROM employees e LEFT JOIN salaries s ON e.emp_no = s.emp_no",
        "SELECT e.emp_no FROM employees e RIGHT JOIN salaries s ON e.emp_no = s.emp_no",
        "SELECT e.emp_no FROM employees e CROSS JOIN salaries s",
        "SELECT a FROM t WHERE b IN (SELECT x.a FROM x INNER JOIN y ON x.id = y.id)",
        "SELECT name FROM departments ORDER BY name",
        "SELECT DISTINCT title FROM titles",
        "SELECT 1",
        "ALTER TABLE employees ADD COLUMN age INT",
        "ALTER TABLE employees DROP COLUMN age",
        "ALTER TABLE employees RENAME TO staff",
        "ALTER TABLE employees ADD INDEX (emp_no)",
        "ALTER TABLE salaries DROP PRIMARY KEY",
        "CREATE TABLE plain (a INT, b VARCHAR(10))",
        "CREATE TABLE copy_table AS (SELECT emp_no, salary FROM salaries)",
        "CREATE TABLE copy2 AS SELECT * FROM employees WHERE emp_no < 100",
        "CREATE TABLE joined_left AS (SELECT e.emp_no FROM employees e LEFT JOIN salaries s ON "
        "e.emp_no = s.emp_no)",
        "CREATE TABLE agg AS (SELECT title, COUNT(*) c FROM titles GROUP BY title)",
        "INSERT INTO employees VALUES (1, 'a', 'b')",
        "INSERT INTO salaries (emp_no, salary) SELECT emp_no, 0 FROM employees",
        "UPDATE employees SET first_name = 'x' WHERE emp_no = 3",
        "DELETE FROM salaries WHERE salary < 0",
        "DROP TABLE result2",
        "DROP INDEX idx_1 ON result2",
        "TRUNCATE TABLE titles",
        "SHOW TABLES",
        "DESCRIBE employees",
        "EXPLAIN SELECT * FROM employees",
    };
    expect(problems, negatives.size() >= 30, "negative corpus must hold at least 30 statements");
    for (const auto& sql : negatives)
        if (!classify_all(sql).empty()) problems.push_back("false positive: " + sql);
}

// ---------------------------------------------------------------------------
// 2. Prompt fidelity for the worked examples.

void check_prompt_fidelity(std::vector<std::string>& problems) {
    PromptBuilder pb;

    {  // Datatype change: no completion prompt, fixed comparison message.
        SessionStore store;
        store.record_command(make_event("g", 0, "CREATE TABLE result (emp_no INT, salary "
                                                "VARCHAR(20))"));
        auto matches = store.record_command(make_event("g", 1, "alter table result modify "
                                                               "salary INT"));
        if (matches.size() != 1) {
            problems.push_back("datatype example did not classify");
            return;
        }
        const SessionState& st = *store.find("g");
        expect(problems, !pb.build_prompt(matches[0], st).has_value(),
               "datatype change must not build a completion prompt");
        const std::string message = pb.render_message(matches[0], {}, st);
        expect(problems, message.find("Compare tradeoffs of using") != std::string::npos,
               "datatype message is missing the comparison lead-in");
        expect(problems, message.find("INT") != std::string::npos,
               "datatype message is missing the new datatype");
    }

    {  // Composite index order prompt, creation command included verbatim.
        SessionStore store;
        store.record_command(make_event("g", 0, kResult2Ctas));
        auto matches = store.record_command(
            make_event("g", 1, "CREATE INDEX idx_1 ON result2 (dept_name, title)"));
        if (matches.size() != 1) {
            problems.push_back("composite order example did not classify");
            return;
        }
        auto prompt = pb.build_prompt(matches[0], *store.find("g"));
        if (!prompt) {
            problems.push_back("composite order example built no prompt");
            return;
        }
        const std::string golden =
            "Look at the following SQL table creation command: " + kResult2Ctas +
            " Now look at this command to create a composite index: "
            "CREATE INDEX idx_1 ON result2 (dept_name, title) "
            "Generate three plausible alternative composite indices, including variants that "
            "switch the column order from the original command. Just generate the alternatives "
            "don't write any text or explanations:";
        expect_eq(problems, squeeze_ws(prompt->text), squeeze_ws(golden),
                  "composite order prompt");
    }

    {  // Single column index prompt.
        SessionStore store;
        store.record_command(make_event("g", 0, kTask2Ctas));
        auto matches =
            store.record_command(make_event("g", 1, "CREATE INDEX title_index ON task2(title)"));
        if (matches.size() != 1) {
            problems.push_back("single column example did not classify");
            return;
        }
        auto prompt = pb.build_prompt(matches[0], *store.find("g"));
        if (!prompt) {
            problems.push_back("single column example built no prompt");
            return;
        }
        const std::string golden =
            "Look at the following SQL table creation command: " + kTask2Ctas +
            " Now look at this command to create a single column index: "
            "CREATE INDEX title_index ON task2(title) "
            "Generate exactly one plausible composite index and exactly one single column index "
            "for optimizing the query. Just generate the alternatives don't write any text or "
            "explanations:";
        expect_eq(problems, squeeze_ws(prompt->text), squeeze_ws(golden),
                  "single column index prompt");
    }
}

// ---------------------------------------------------------------------------
// 3. Pacing decisions match a naive straightline reference.

void check_scheduler_equivalence(std::vector<std::string>& problems) {
    std::mt19937 rng(20240816);
    const double taus[] = {0.0, 15.0, 60.0, 300.0};
    long compared = 0;

    for (int trace = 0; trace < 1000 && problems.empty(); ++trace) {
        SchedulerState prod;
        refimpl::Reference ref;
        prod.config.tau_s = ref.tau = taus[trace % 4];
        const bool head_clock = (trace / 4) % 2 == 1;
        const bool timer_mode = (trace / 8) % 2 == 1;
        prod.config.clock = head_clock ? SpacingClock::HeadTrigger : SpacingClock::LastShown;
        prod.config.drain = timer_mode ? DrainMode::Timer : DrainMode::EventDriven;
        ref.head_clock = head_clock;
        ref.timer_mode = timer_mode;

        double now = 0.0;
        int seq = 0;
        const int steps = 20 + static_cast<int>(rng() % 60);
        for (int step = 0; step < steps; ++step) {
            now += static_cast<double>(rng() % 80);
            const unsigned op = rng() % 10;
            if (op < 6) {  // offer
                Reflection r;
                r.id = "r" + std::to_string(++seq);
                r.intervention = static_cast<InterventionType>(rng() % kInterventionTypeCount);
                r.created_at = now;
                const ScheduleDecision got = offer(prod, r, now);
                const refimpl::Decision want = ref.offer(r, now);
                ++compared;
                if (got.action != want.action) {
                    problems.push_back("trace " + std::to_string(trace) + " step " +
                                       std::to_string(step) + ": action " +
                                       to_string(got.action) + " vs " + to_string(want.action));
                    break;
                }
                const std::optional<std::string> got_id =
                    got.shown ? std::optional<std::string>(got.shown->id) : std::nullopt;
                if (got_id != want.shown_id) {
                    problems.push_back("trace " + std::to_string(trace) +
                                       ": shown id diverged on offer");
                    break;
                }
            } else if (op < 8) {  // tick
                const std::optional<Reflection> got = tick(prod, now);
                const std::optional<std::string> want = ref.tick(now);
                ++compared;
                const std::optional<std::string> got_id =
                    got ? std::optional<std::string>(got->id) : std::nullopt;
                if (got_id != want) {
                    problems.push_back("trace " + std::to_string(trace) +
                                       ": shown id diverged on tick");
                    break;
                }
            } else {  // task advance (never regresses)
                const int next = std::min(prod.task_id + static_cast<int>(rng() % 2), 4);
                const std::vector<Reflection> got = set_task(prod, next, now);
                const std::vector<std::string> want = ref.set_task(next, now);
                ++compared;
                std::vector<std::string> got_ids;
                for (const auto& r : got) got_ids.push_back(r.id);
                if (got_ids != want) {
                    problems.push_back("trace " + std::to_string(trace) +
                                       ": flush diverged on task advance");
                    break;
                }
            }
        }
        if (prod.pending.size() != ref.q.size())
            problems.push_back("trace " + std::to_string(trace) + ": queue sizes diverged");
    }
    expect(problems, compared > 1000, "traces were unexpectedly short");
}

// ---------------------------------------------------------------------------
// 4. Spacing property on synthetic logs.

void check_spacing_property(std::vector<std::string>& problems) {
    const double taus[] = {0.0, 15.0, 60.0, 300.0};
    for (unsigned seed = 1; seed <= 200 && problems.empty(); ++seed) {
        const double tau = taus[seed % 4];
        const auto log = group_records(synthetic_log(seed, 3, 30));

        // Task-3 entry time per session, from the log itself.
        std::map<std::string, double> task3_at;
        for (const auto& [session, records] : log)
            for (const LogRecord& rec : records)
                if (rec.kind == LogRecord::Kind::TaskAdvance && rec.task >= 3 &&
                    !task3_at.count(session))
                    task3_at[session] = rec.ts;

        ReplayConfig cfg;
        cfg.tau_s = tau;
        const ReplayReport report = replay(log, cfg);

        std::map<std::string, double> prev;
        for (const Firing& f : report.firings) {
            const auto t3 = task3_at.find(f.session);
            const bool final_task = t3 != task3_at.end() && f.ts >= t3->second;
            const auto it = prev.find(f.session);
            if (it != prev.end() && !final_task && f.ts - it->second <= tau) {
                std::ostringstream msg;
                msg << "seed " << seed << " tau " << tau << ": firings " << it->second << " and "
                    << f.ts << " in session " << f.session << " violate the spacing gap";
                problems.push_back(msg.str());
                break;
            }
            prev[f.session] = f.ts;
        }

        // After the final-task switch every classified trigger fires at its
        // own command timestamp.
        for (const auto& [session, records] : log) {
            const auto t3 = task3_at.find(session);
            if (t3 == task3_at.end()) continue;
            for (const LogRecord& rec : records) {
                if (rec.kind != LogRecord::Kind::Command || rec.ts < t3->second) continue;
                std::size_t expected = 0;
                for (const std::string& stmt : split_statements(rec.sql))
                    expected += classify_all(stmt).size();
                if (expected == 0) continue;
                std::size_t found = 0;
                for (const Firing& f : report.firings)
                    if (f.session == session && f.ts == rec.ts) ++found;
                if (found < expected) {
                    std::ostringstream msg;
                    msg << "seed " << seed << ": trigger at t=" << rec.ts << " in " << session
                        << " was not shown immediately in the final task";
                    problems.push_back(msg.str());
                    break;
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// 5. Histogram share arithmetic.

void check_histogram_share(std::vector<std::string>& problems) {
    // Intervals engineered to bin as {10, 11, 26, 98} over edges 60/120/300.
    std::vector<double> intervals;
    intervals.insert(intervals.end(), 10, 30.0);
    intervals.insert(intervals.end(), 11, 90.0);
    intervals.insert(intervals.end(), 26, 200.0);
    intervals.insert(intervals.end(), 98, 400.0);

    const std::vector<double> edges = {60.0, 120.0, 300.0};
    const auto [counts, percent] = interval_histogram(intervals, edges);
    expect(problems, counts == std::vector<long>({10, 11, 26, 98}),
           "bucket counts are not {10, 11, 26, 98}");
    expect(problems, std::abs(percent - 67.6) <= 0.05,
           "share of >=300s gaps must be 67.6% within 0.05 points, got " +
               std::to_string(percent));

    ReplayReport report;
    report.intervals = intervals;
    report.histogram = counts;
    report.total_intervals = static_cast<long>(intervals.size());
    report.percent_at_or_above_last_edge = percent;
    ReplayConfig cfg;
    cfg.bucket_edges = edges;
    const std::string table = report_table(report, cfg);
    expect(problems, table.find(">=300s share: 67.6%") != std::string::npos,
           "report table must print the 67.6% share line");
}

// ---------------------------------------------------------------------------
// 6. Replay oracle for the bundled fixture.

void check_replay_oracle(std::vector<std::string>& problems) {
    const fs::path fixture = fs::path(REFLECTSQL_DATA_DIR) / "fixtures" / "sample_session.jsonl";
    const fs::path oracle_file =
        fs::path(REFLECTSQL_DATA_DIR) / "fixtures" / "sample_session.oracle.json";
    std::ifstream in(oracle_file);
    if (!in) {
        problems.push_back("missing oracle file " + oracle_file.string());
        return;
    }
    const json oracle = json::parse(in);

    ReplayConfig unscheduled;
    unscheduled.scheduling_enabled = false;
    const ReplayReport report = replay(load_log(fixture), unscheduled);

    const auto& firings = oracle.at("firings");
    expect_eq(problems, report.firings.size(), firings.size(), "firing count");
    for (std::size_t i = 0; i < report.firings.size() && i < firings.size(); ++i) {
        const Firing& got = report.firings[i];
        const json& want = firings[i];
        if (got.session != want.at("session").get<std::string>() ||
            got.ts != want.at("ts").get<double>() ||
            to_string(got.type) != want.at("type").get<std::string>()) {
            std::ostringstream msg;
            msg << "firing " << i << " diverges from the oracle (got " << got.session << " t="
                << got.ts << " " << to_string(got.type) << ")";
            problems.push_back(msg.str());
        }
    }
    expect(problems, report.intervals == oracle.at("intervals").get<std::vector<double>>(),
           "intervals diverge from the oracle");
    expect(problems, report.histogram == oracle.at("histogram").get<std::vector<long>>(),
           "histogram diverges from the oracle");
    expect_eq(problems, report.total_intervals, oracle.at("total_intervals").get<long>(),
              "total intervals");
    expect_eq(problems, report.percent_at_or_above_last_edge,
              oracle.at("percent_at_or_above_last_edge").get<double>(), "share percent");

    ReplayConfig zero_tau;
    zero_tau.tau_s = 0.0;
    const ReplayReport spaced = replay(load_log(fixture), zero_tau);
    expect(problems, spaced.histogram == report.histogram,
           "tau=0 scheduling must reproduce the unscheduled histogram");
    expect(problems, spaced.intervals == report.intervals,
           "tau=0 scheduling must reproduce the unscheduled intervals");
}

// ---------------------------------------------------------------------------
// 7. Validation loop on mock output, plus forced fallbacks.

class ProseBackend final : public CompletionBackend {
public:
    CompletionResult complete(const CompletionRequest&) override {
        return {"I think you should carefully consider whether an index helps here at all.",
                "mock", 0.0};
    }
    std::string name() const override { return "mock"; }
};

void check_validation_loop(std::vector<std::string>& problems) {
    MockBackend mock;
    PromptBuilder pb;
    std::mt19937 rng(7);
    const char* tables[] = {"employees", "salaries", "titles", "result2", "task2"};
    const char* columns[] = {"emp_no", "salary", "title", "dept_name", "from_date", "to_date"};

    long accepted = 0, total = 0;
    std::optional<LlmPrompt> sample_prompt;
    std::string sample_completion;

    for (int round = 0; round < 25; ++round) {
        const std::string table = tables[rng() % 5];
        const std::string col_a = columns[rng() % 6];
        std::string col_b = columns[rng() % 6];
        while (col_b == col_a) col_b = columns[rng() % 6];
        const bool registered = rng() % 2 == 0;

        const std::vector<std::string> triggers = {
            "CREATE INDEX ix_a ON " + table + "(" + col_a + ", " + col_b + ")",
            "CREATE INDEX ix_s ON " + table + "(" + col_a + ")",
            "SELECT a." + col_a + ", b." + col_b + " FROM " + table + " a INNER JOIN other b ON "
                "a.id = b.id",
            "CREATE TABLE d_" + std::to_string(round) + " AS (SELECT a." + col_a + " FROM " +
                table + " a INNER JOIN other b ON a.id = b.id)",
        };
        for (const std::string& sql : triggers) {
            SessionStore store;
            if (registered)
                store.record_command(make_event("g", 0, "CREATE TABLE " + table + " (" + col_a +
                                                            " INT, " + col_b +
                                                            " VARCHAR(10), id INT)"));
            auto matches = store.record_command(make_event("g", 1, sql));
            if (matches.size() != 1) {
                problems.push_back("round trigger did not classify: " + sql);
                continue;
            }
            const SessionState& st = *store.find("g");
            auto prompt = pb.build_prompt(matches[0], st);
            if (!prompt) {
                problems.push_back("no prompt for: " + sql);
                continue;
            }
            CompletionRequest req;
            req.prompt = prompt->text;
            const CompletionResult result = mock.complete(req);
            const ValidationOutcome outcome = validate_alternatives(result.text, *prompt, &st);
            ++total;
            if (outcome.accept) ++accepted;
            else problems.push_back("mock output rejected for: " + sql);
            if (!sample_prompt && prompt->expected_alternatives == 3) {
                sample_prompt = *prompt;
                sample_completion = result.text;
            }
        }
    }
    expect_eq(problems, accepted, total, "accepted mock completions");
    expect(problems, total == 100, "expected 100 generation rounds");

    if (sample_prompt) {
        SessionState dummy;
        const ValidationOutcome prose =
            validate_alternatives("I think you should carefully consider whether an index "
                                  "helps here at all.",
                                  *sample_prompt, &dummy);
        expect(problems, !prose.accept, "prose-only completion must be rejected");

        std::string truncated = sample_completion;
        truncated.resize(truncated.size() - truncated.size() / 4);
        const ValidationOutcome cut = validate_alternatives(truncated, *sample_prompt, &dummy);
        expect(problems, !cut.accept, "completion with a truncated alternative must be rejected");
    } else {
        problems.push_back("no composite-order sample was captured");
    }

    // End to end: a prose backend degrades the HTTP response to the static
    // fallback message.
    ServiceConfig cfg;
    Service service(std::move(cfg));
    service.engine().set_backend(std::make_unique<ProseBackend>());
    const int port = service.start_background();
    if (port <= 0) {
        problems.push_back("service failed to bind an ephemeral port");
        return;
    }
    httplib::Client client("127.0.0.1", port);
    auto created = client.Post("/v1/sessions", R"({"group_id":"fallback"})", "application/json");
    if (!created || created->status != 201) {
        problems.push_back("session creation failed for fallback check");
        return;
    }
    const std::string sid = json::parse(created->body).at("session_id");
    auto response = client.Post("/v1/sessions/" + sid + "/commands",
                                json{{"sql", "CREATE INDEX ix ON t(a, b)"}, {"ts", 0.0}}.dump(),
                                "application/json");
    if (!response || response->status != 200) {
        problems.push_back("command failed for fallback check");
        return;
    }
    const json body = json::parse(response->body);
    expect_eq(problems, body.at("reflection").at("origin").get<std::string>(),
              std::string("static_fallback"), "end-to-end reflection origin");
    expect(problems, body.at("reflection").at("alternatives").empty(),
           "fallback reflection must carry no generated alternatives");
    service.stop();
}

// ---------------------------------------------------------------------------
// 8. Byte-stable service transcript.

struct TranscriptRun {
    std::string transcript;
    std::string reflections;  // final reflection listing, reused for reload
};

TranscriptRun run_scripted_session(const fs::path& log_dir, std::vector<std::string>& problems) {
    ServiceConfig cfg;
    cfg.engine.log_dir = log_dir;
    Service service(std::move(cfg));
    const int port = service.start_background();
    TranscriptRun run;
    if (port <= 0) {
        problems.push_back("service failed to bind an ephemeral port");
        return run;
    }
    httplib::Client client("127.0.0.1", port);
    std::ostringstream out;

    auto post = [&](const std::string& path, const json& body) {
        auto res = client.Post(path, body.dump(), "application/json");
        if (!res) {
            problems.push_back("request failed: " + path);
            return std::string();
        }
        out << "POST " << path << " " << res->status << "\n" << res->body << "\n";
        return res->body;
    };

    const std::string created = post("/v1/sessions", json{{"group_id", "g1"}});
    if (created.empty()) return run;
    const std::string sid = json::parse(created).value("session_id", "");
    if (sid != "g1-1") problems.push_back("expected session id g1-1, got " + sid);

    const std::vector<std::pair<double, std::string>> commands = {
        {0.0, kResult2Ctas},
        {30.0, "CREATE INDEX idx_1 ON result2 (dept_name, title)"},
        {60.0, "CREATE TABLE result (emp_no INT, salary VARCHAR(20))"},
        {90.0, "alter table result modify salary INT"},
        {120.0, "CREATE INDEX salary_index ON result(salary)"},
        {400.0, "CREATE INDEX idx_9 ON result2 (title, emp_no)"},
        {450.0, "SELECT e.emp_no FROM employees e INNER JOIN salaries s ON e.emp_no = s.emp_no"},
        {460.0, "SELECT x.a FROM x INNER JOIN y ON x.id = y.id"},
    };
    std::vector<std::string> decisions;
    for (const auto& [ts, sql] : commands) {
        const std::string body = post("/v1/sessions/" + sid + "/commands",
                                      json{{"sql", sql}, {"ts", ts}, {"author", "alice"}});
        if (body.empty()) return run;
        decisions.push_back(json::parse(body).value("decision", "?"));
    }
    const std::vector<std::string> expected_decisions = {
        "show_now", "queued", "none", "queued", "queued", "show_queued", "queued", "dropped"};
    if (decisions != expected_decisions) {
        std::string got;
        for (const auto& d : decisions) got += d + " ";
        problems.push_back("decision sequence diverged: " + got);
    }

    post("/v1/sessions/" + sid + "/task", json{{"task_id", 2}, {"ts", 500.0}});
    const std::string flush = post("/v1/sessions/" + sid + "/task",
                                   json{{"task_id", 3}, {"ts", 600.0}});
    if (!flush.empty()) {
        const json parsed = json::parse(flush);
        if (parsed.value("flushed", json::array()).size() != 3)
            problems.push_back("final-task flush must release the three queued reflections");
    }

    auto listed = client.Get("/v1/sessions/" + sid + "/reflections");
    if (!listed) {
        problems.push_back("reflection listing failed");
        return run;
    }
    out << "GET /v1/sessions/" << sid << "/reflections " << listed->status << "\n"
        << listed->body << "\n";
    run.reflections = listed->body;
    run.transcript = out.str();
    service.stop();
    return run;
}

void check_service_transcript(std::vector<std::string>& problems) {
    TempDir first_dir, second_dir;
    const TranscriptRun first = run_scripted_session(first_dir.path, problems);
    const TranscriptRun second = run_scripted_session(second_dir.path, problems);
    if (!problems.empty()) return;
    expect(problems, first.transcript == second.transcript,
           "transcript differs between two fresh runs");
    expect(problems, !first.transcript.empty(), "transcript is empty");

    // Reload from the first run's event log; the shown history must paint
    // the exact same reflection listing.
    ServiceConfig cfg;
    cfg.engine.log_dir = first_dir.path;
    Service service(std::move(cfg));
    const int port = service.start_background();
    if (port <= 0) {
        problems.push_back("reloaded service failed to bind");
        return;
    }
    httplib::Client client("127.0.0.1", port);
    auto listed = client.Get("/v1/sessions/g1-1/reflections");
    if (!listed || listed->status != 200) {
        problems.push_back("reloaded service does not know the persisted session");
    } else {
        expect(problems, listed->body == first.reflections,
               "reflection listing changed across the persist/reload cycle");
    }
    service.stop();
}

}  // namespace

int main() {
    criterion(1, "the five known trigger commands classify correctly and 30 non-triggers stay "
                 "silent", 1.0, check_classification);
    criterion(2, "built prompts equal the worked-example texts after whitespace normalization",
              0.0, check_prompt_fidelity);
    criterion(3, "1,000 randomized pacing traces match the straightline reference", 10.0,
              check_scheduler_equivalence);
    criterion(4, "200 synthetic logs keep shown reflections spaced by more than tau until the "
                 "final task", 0.0, check_spacing_property);
    criterion(5, "gap histogram {10, 11, 26, 98} reports the >=300s share as 67.6%", 0.0,
              check_histogram_share);
    criterion(6, "fixture replay equals the hand-computed oracle and tau=0 equals unscheduled",
              0.0, check_replay_oracle);
    criterion(7, "mock completions all validate; prose or truncated output falls back to the "
                 "static message", 0.0, check_validation_loop);
    criterion(8, "scripted 8-command service session yields a byte-stable transcript across "
                 "runs and reload", 5.0, check_service_transcript);
    skip(9, "learning-gain statistics and completion-rate comparisons",
         "requires classroom course data that is not part of this repository; pacing and "
         "replay behavior is covered by criteria 3-6 instead");

    std::printf("acceptance: %d passed, %d failed, %d skipped\n", 8 - failures, failures, skips);
    return failures == 0 ? 0 : 1;
}
