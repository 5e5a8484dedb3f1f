#include "reflectsql/replay.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <random>
#include <sstream>

#include <json.hpp>

#include "reflectsql/sql_matcher.hpp"

namespace reflectsql {

namespace {

void check_edges(const std::vector<double>& edges) {
    if (edges.empty()) throw ConfigError("histogram needs at least one bucket edge");
    double prev = 0.0;
    for (double e : edges) {
        if (e <= prev) throw ConfigError("bucket edges must be positive and strictly increasing");
        prev = e;
    }
}

std::string fmt_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::string fmt_percent(double v) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(1) << v;
    return out.str();
}

}  // namespace

std::map<std::string, std::vector<LogRecord>> group_records(
    const std::vector<LogRecord>& records) {
    std::map<std::string, std::vector<LogRecord>> grouped;
    for (const LogRecord& rec : records) grouped[rec.session].push_back(rec);
    for (auto& [session, recs] : grouped) {
        std::stable_sort(recs.begin(), recs.end(),
                         [](const LogRecord& a, const LogRecord& b) { return a.ts < b.ts; });
    }
    return grouped;
}

std::map<std::string, std::vector<LogRecord>> load_log(const std::filesystem::path& file) {
    return group_records(SessionStore::read_log(file));
}

ReplayReport replay(const std::map<std::string, std::vector<LogRecord>>& log,
                    const ReplayConfig& cfg) {
    check_edges(cfg.bucket_edges);
    if (cfg.tau_s < 0) throw ConfigError("tau must not be negative");

    ReplayReport report;
    for (const auto& [session, records] : log) {
        std::vector<Firing> fired;
        SchedulerState sched;
        sched.config.tau_s = cfg.tau_s;
        sched.config.clock = cfg.clock;
        for (const LogRecord& rec : records) {
            if (rec.kind == LogRecord::Kind::TaskAdvance) {
                if (!cfg.scheduling_enabled) continue;
                for (const Reflection& r : set_task(sched, rec.task, rec.ts))
                    fired.push_back({session, rec.ts, r.intervention});
                continue;
            }
            for (const TriggerMatch& m : classify_all(rec.sql)) {
                const InterventionType type = intervention_type(m);
                if (!cfg.scheduling_enabled) {
                    fired.push_back({session, rec.ts, type});
                    continue;
                }
                Reflection r;
                r.intervention = type;
                r.session_id = session;
                r.created_at = rec.ts;
                const ScheduleDecision decision = offer(sched, std::move(r), rec.ts);
                if (decision.shown)
                    fired.push_back({session, rec.ts, decision.shown->intervention});
            }
        }
        for (std::size_t i = 1; i < fired.size(); ++i)
            report.intervals.push_back(fired[i].ts - fired[i - 1].ts);
        report.firings.insert(report.firings.end(), fired.begin(), fired.end());
    }

    auto [histogram, percent] = interval_histogram(report.intervals, cfg.bucket_edges);
    report.histogram = std::move(histogram);
    report.total_intervals = static_cast<long>(report.intervals.size());
    report.percent_at_or_above_last_edge = percent;
    return report;
}

std::pair<std::vector<long>, double> interval_histogram(const std::vector<double>& intervals,
                                                        const std::vector<double>& edges) {
    check_edges(edges);
    std::vector<long> counts(edges.size() + 1, 0);
    for (double v : intervals) {
        const std::size_t bucket =
            static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), v) -
                                     edges.begin());
        ++counts[bucket];
    }
    double percent = 0.0;
    if (!intervals.empty()) {
        percent = 100.0 * static_cast<double>(counts.back()) /
                  static_cast<double>(intervals.size());
        percent = std::round(percent * 10.0) / 10.0;
    }
    return {std::move(counts), percent};
}

std::vector<std::pair<double, ReplayReport>> sweep_tau(
    const std::map<std::string, std::vector<LogRecord>>& log, const std::vector<double>& taus,
    const ReplayConfig& base) {
    if (taus.empty()) throw ConfigError("sweep needs at least one tau value");
    std::vector<std::pair<double, ReplayReport>> out;
    out.reserve(taus.size());
    for (double tau : taus) {
        ReplayConfig cfg = base;
        cfg.tau_s = tau;
        cfg.scheduling_enabled = true;
        out.emplace_back(tau, replay(log, cfg));
    }
    return out;
}

std::vector<std::string> bucket_labels(const std::vector<double>& edges) {
    check_edges(edges);
    std::vector<std::string> labels;
    labels.push_back("<" + fmt_num(edges.front()) + "s");
    for (std::size_t i = 1; i < edges.size(); ++i)
        labels.push_back(fmt_num(edges[i - 1]) + "-" + fmt_num(edges[i]) + "s");
    labels.push_back(">=" + fmt_num(edges.back()) + "s");
    return labels;
}

std::string report_table(const ReplayReport& report, const ReplayConfig& cfg) {
    std::ostringstream out;
    std::size_t session_width = 7;
    for (const Firing& f : report.firings) session_width = std::max(session_width, f.session.size());

    out << "firings: " << report.firings.size() << "\n";
    out << "  " << std::left << std::setw(static_cast<int>(session_width) + 2) << "session"
        << std::setw(10) << "t" << "type\n";
    for (const Firing& f : report.firings) {
        out << "  " << std::setw(static_cast<int>(session_width) + 2) << f.session
            << std::setw(10) << fmt_num(f.ts) << to_string(f.type) << "\n";
    }

    const std::vector<std::string> labels = bucket_labels(cfg.bucket_edges);
    out << "intervals: " << report.total_intervals << "\n";
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double share = report.total_intervals == 0
                                 ? 0.0
                                 : 100.0 * static_cast<double>(report.histogram[i]) /
                                       static_cast<double>(report.total_intervals);
        out << "  " << std::setw(12) << labels[i] << std::right << std::setw(6)
            << report.histogram[i] << std::setw(8) << fmt_percent(share) << "%\n"
            << std::left;
    }
    out << labels.back() << " share: " << fmt_percent(report.percent_at_or_above_last_edge)
        << "%\n";
    return out.str();
}

std::string report_json(const ReplayReport& report, const ReplayConfig& cfg) {
    nlohmann::ordered_json j;
    j["firings"] = nlohmann::ordered_json::array();
    for (const Firing& f : report.firings) {
        nlohmann::ordered_json jf;
        jf["session"] = f.session;
        jf["ts"] = f.ts;
        jf["type"] = to_string(f.type);
        j["firings"].push_back(std::move(jf));
    }
    j["intervals"] = report.intervals;
    nlohmann::ordered_json hist;
    const std::vector<std::string> labels = bucket_labels(cfg.bucket_edges);
    for (std::size_t i = 0; i < labels.size(); ++i) hist[labels[i]] = report.histogram[i];
    j["histogram"] = std::move(hist);
    j["percent"] = report.percent_at_or_above_last_edge;
    return j.dump(2) + "\n";
}

std::string report_csv(const ReplayReport& report, const ReplayConfig& cfg) {
    std::ostringstream out;
    out << "bucket,count,share_percent\n";
    const std::vector<std::string> labels = bucket_labels(cfg.bucket_edges);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double share = report.total_intervals == 0
                                 ? 0.0
                                 : 100.0 * static_cast<double>(report.histogram[i]) /
                                       static_cast<double>(report.total_intervals);
        out << labels[i] << "," << report.histogram[i] << "," << fmt_percent(share) << "\n";
    }
    return out.str();
}

std::string sweep_table(const std::vector<std::pair<double, ReplayReport>>& sweep,
                        const std::vector<double>& edges) {
    const std::vector<std::string> labels = bucket_labels(edges);
    std::ostringstream out;
    out << std::left << std::setw(14) << "bucket";
    for (const auto& [tau, report] : sweep)
        out << std::right << std::setw(10) << ("tau=" + fmt_num(tau));
    out << "\n";
    for (std::size_t i = 0; i < labels.size(); ++i) {
        out << std::left << std::setw(14) << labels[i];
        for (const auto& [tau, report] : sweep)
            out << std::right << std::setw(10) << report.histogram[i];
        out << "\n";
    }
    out << std::left << std::setw(14) << "intervals";
    for (const auto& [tau, report] : sweep)
        out << std::right << std::setw(10) << report.total_intervals;
    out << "\n";
    out << std::left << std::setw(14) << (labels.back() + " %");
    for (const auto& [tau, report] : sweep)
        out << std::right << std::setw(10) << fmt_percent(report.percent_at_or_above_last_edge);
    out << "\n";
    return out.str();
}

std::string sweep_csv(const std::vector<std::pair<double, ReplayReport>>& sweep,
                      const std::vector<double>& edges) {
    const std::vector<std::string> labels = bucket_labels(edges);
    std::ostringstream out;
    out << "bucket";
    for (const auto& [tau, report] : sweep) out << ",tau=" << fmt_num(tau);
    out << "\n";
    for (std::size_t i = 0; i < labels.size(); ++i) {
        out << labels[i];
        for (const auto& [tau, report] : sweep) out << "," << report.histogram[i];
        out << "\n";
    }
    out << "total_intervals";
    for (const auto& [tau, report] : sweep) out << "," << report.total_intervals;
    out << "\n";
    out << "percent";
    for (const auto& [tau, report] : sweep)
        out << "," << fmt_percent(report.percent_at_or_above_last_edge);
    out << "\n";
    return out.str();
}

std::string sweep_json(const std::vector<std::pair<double, ReplayReport>>& sweep,
                       const std::vector<double>& edges) {
    const std::vector<std::string> labels = bucket_labels(edges);
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& [tau, report] : sweep) {
        nlohmann::ordered_json row;
        row["tau"] = tau;
        nlohmann::ordered_json hist;
        for (std::size_t i = 0; i < labels.size(); ++i) hist[labels[i]] = report.histogram[i];
        row["histogram"] = std::move(hist);
        row["total_intervals"] = report.total_intervals;
        row["percent"] = report.percent_at_or_above_last_edge;
        rows.push_back(std::move(row));
    }
    return rows.dump(2) + "\n";
}

std::vector<LogRecord> synthetic_log(unsigned seed, int sessions, int commands_per_session) {
    std::mt19937 rng(seed);
    std::vector<LogRecord> records;
    for (int s = 0; s < sessions; ++s) {
        const std::string session = "s" + std::to_string(s + 1);
        double clock = 0.0;
        int task = 1;
        int index_seq = 0;
        const int to_task2 = std::max(1, (commands_per_session * 3) / 5);
        const int to_task3 = std::max(to_task2 + 1, (commands_per_session * 17) / 20);
        for (int i = 0; i < commands_per_session; ++i) {
            clock += 1.0 + static_cast<double>(rng() % 240);
            if (task == 1 && i == to_task2) {
                LogRecord adv;
                adv.kind = LogRecord::Kind::TaskAdvance;
                adv.ts = clock;
                adv.session = session;
                adv.task = task = 2;
                records.push_back(std::move(adv));
                clock += 1.0 + static_cast<double>(rng() % 240);
            } else if (task == 2 && i == to_task3) {
                LogRecord adv;
                adv.kind = LogRecord::Kind::TaskAdvance;
                adv.ts = clock;
                adv.session = session;
                adv.task = task = 3;
                records.push_back(std::move(adv));
                clock += 1.0 + static_cast<double>(rng() % 240);
            }

            const std::string table = "t" + std::to_string(1 + rng() % 3);
            std::string sql;
            switch (rng() % 8) {
                case 0:
                    sql = "CREATE TABLE " + table + " (a INT, b VARCHAR(10), c INT)";
                    break;
                case 1:
                    sql = "ALTER TABLE " + table + " MODIFY a VARCHAR(5)";
                    break;
                case 2:
                    sql = "CREATE INDEX ix" + std::to_string(++index_seq) + " ON " + table +
                          "(a)";
                    break;
                case 3:
                    sql = "CREATE INDEX ix" + std::to_string(++index_seq) + " ON " + table +
                          "(a, b)";
                    break;
                case 4:
                    sql = "SELECT p.a, q.b FROM p INNER JOIN q ON p.id = q.id";
                    break;
                case 5:
                    sql = "CREATE TABLE d" + std::to_string(++index_seq) +
                          " AS (SELECT p.a FROM p INNER JOIN q ON p.id = q.id)";
                    break;
                case 6:
                    sql = "SELECT a FROM " + table;
                    break;
                default:
                    sql = "UPDATE " + table + " SET a = 1 WHERE b = 2";
                    break;
            }
            LogRecord rec;
            rec.kind = LogRecord::Kind::Command;
            rec.ts = clock;
            rec.session = session;
            rec.task = task;
            if (rng() % 3 != 0) rec.author = "u" + std::to_string(1 + rng() % 4);
            rec.sql = std::move(sql);
            records.push_back(std::move(rec));
        }
    }
    return records;
}

}  // namespace reflectsql
