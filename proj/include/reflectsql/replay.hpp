#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "reflectsql/scheduler.hpp"
#include "reflectsql/session_store.hpp"

namespace reflectsql {

struct ReplayConfig {
    double tau_s = 300.0;
    bool scheduling_enabled = true;
    SpacingClock clock = SpacingClock::LastShown;
    // Histogram bucket boundaries, strictly increasing and positive.
    std::vector<double> bucket_edges = {60.0, 120.0, 300.0};
};

// One reflection delivery: the decision time, not the trigger time.
struct Firing {
    std::string session;
    double ts = 0.0;
    InterventionType type = InterventionType::DATATYPE_COMPARISON;
};

struct ReplayReport {
    std::vector<Firing> firings;    // session-major, chronological within a session
    std::vector<double> intervals;  // gaps between consecutive firings of one session
    std::vector<long> histogram;    // bucket_edges.size() + 1 half-open buckets
    long total_intervals = 0;
    double percent_at_or_above_last_edge = 0.0;  // rounded to one decimal
};

// Groups records by session id and orders them by timestamp.
std::map<std::string, std::vector<LogRecord>> group_records(const std::vector<LogRecord>& records);

// Reads a JSONL event log; malformed lines raise ParseError naming the line.
// An empty file yields zero sessions.
std::map<std::string, std::vector<LogRecord>> load_log(const std::filesystem::path& file);

// Runs every session through classification and (optionally) the queue
// scheduler. Generation is skipped entirely: only types and times matter.
ReplayReport replay(const std::map<std::string, std::vector<LogRecord>>& log,
                    const ReplayConfig& cfg);

// Buckets [0,e1), [e1,e2), ..., [eN,inf). Returns per-bucket counts and the
// share of the last bucket as a percentage rounded to one decimal.
std::pair<std::vector<long>, double> interval_histogram(const std::vector<double>& intervals,
                                                        const std::vector<double>& edges);

// Replays once per tau value; everything else comes from `base`.
std::vector<std::pair<double, ReplayReport>> sweep_tau(
    const std::map<std::string, std::vector<LogRecord>>& log, const std::vector<double>& taus,
    const ReplayConfig& base);

// "<60s", "60-120s", ..., ">=300s" for edges {60,120,300}.
std::vector<std::string> bucket_labels(const std::vector<double>& edges);

std::string report_table(const ReplayReport& report, const ReplayConfig& cfg);
std::string report_json(const ReplayReport& report, const ReplayConfig& cfg);
std::string report_csv(const ReplayReport& report, const ReplayConfig& cfg);
std::string sweep_table(const std::vector<std::pair<double, ReplayReport>>& sweep,
                        const std::vector<double>& edges);
std::string sweep_csv(const std::vector<std::pair<double, ReplayReport>>& sweep,
                      const std::vector<double>& edges);
std::string sweep_json(const std::vector<std::pair<double, ReplayReport>>& sweep,
                       const std::vector<double>& edges);

// Seeded random session logs: a statement mix that hits all five trigger
// types plus noise, strictly increasing timestamps, and task advances to 2
// and 3 partway through. Same seed, same log.
std::vector<LogRecord> synthetic_log(unsigned seed, int sessions, int commands_per_session);

}  // namespace reflectsql
