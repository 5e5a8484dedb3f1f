#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "reflectsql/scheduler.hpp"
#include "reflectsql/sql_matcher.hpp"
#include "reflectsql/types.hpp"

namespace reflectsql {

// What a session has taught us about one table. creation_command is the
// normalized statement that defined it ("" when the table was never created
// in this session, e.g. it only appeared in an ALTER).
struct TableInfo {
    std::string name;
    std::string creation_command;
    std::vector<ColumnDef> columns;  // DDL order
    // Datatype a column held before its most recent MODIFY, keyed by
    // lowercased column name.
    std::unordered_map<std::string, std::string> prior_types;

    const ColumnDef* find_column(const std::string& column) const;
};

// One line of a session log.
struct LogRecord {
    enum class Kind { Command, TaskAdvance };
    Kind kind = Kind::Command;
    double ts = 0.0;
    std::string session;
    int task = 1;
    std::optional<std::string> author;
    std::string sql;  // single normalized statement; empty for task advances
};

struct SessionState {
    std::string id;
    int task_id = 1;
    double last_ts = 0.0;
    bool seen_event = false;
    std::vector<LogRecord> log;
    std::unordered_map<std::string, TableInfo> tables;  // keyed by lowercased name
    SchedulerState scheduler;
    // Reflections actually shown, as (timestamp, type). fired spans the
    // session; fired_this_task restarts at each task advance (the paper
    // leaves the reset policy open, so both views are kept).
    std::vector<std::pair<double, InterventionType>> fired;
    std::vector<std::pair<double, InterventionType>> fired_this_task;

    const TableInfo* find_table(const std::string& name) const;
    const LogRecord* last_command() const;
    std::optional<std::string> lookup_table_creation(const std::string& table) const;
    std::optional<std::string> lookup_column_type(const std::string& table,
                                                  const std::string& column) const;
};

// Event-sourced session registry. State is a pure function of the log:
// recording the same records in the same order reproduces the same tables,
// task ids, and trigger matches, which is what makes save/load exact.
class SessionStore {
public:
    SessionState& session(const std::string& id);  // creates on first use
    SessionState* find(const std::string& id);
    const SessionState* find(const std::string& id) const;
    std::vector<std::string> session_ids() const;  // creation order

    // Appends one command event, updates the table registry, and returns
    // the trigger matches the statement produces. An ALTER TABLE with
    // several MODIFY clauses yields one match per clause. Throws
    // OrderingError when ev.timestamp precedes the session's last event.
    std::vector<TriggerMatch> record_command(const SqlEvent& ev);

    // Runs the pacing step for one reflection against the session's
    // scheduler state and maintains the fired lists. The reflection shown
    // by ShowQueued is the popped queue head, not the offered one.
    ScheduleDecision offer_reflection(const std::string& session_id, Reflection r, double now);

    // Moves the session to `task`. Task ids never regress; moving to the
    // current task is a no-op. Entering task 3 flushes the pending queue;
    // the flushed reflections are returned shown, in FIFO order.
    std::vector<Reflection> advance_task(const std::string& session_id, int task, double ts);

    // Timer drain against the session's scheduler; maintains the fired
    // lists like offer_reflection does.
    std::optional<Reflection> tick_session(const std::string& session_id, double now);

    void save_session(const std::string& session_id, const std::filesystem::path& file) const;

    // Reads a single-session JSONL log and replays it through
    // record_command, offer_reflection, and advance_task, reproducing the
    // registry, fired lists, and scheduler state. Queued reflections are
    // rebuilt as shells (type and trigger only, no message text); callers
    // that need messages replay the log through the full pipeline instead.
    // Throws ParseError naming the bad line, Error when the file mixes
    // session ids.
    SessionState& load_session(const std::filesystem::path& file);

    static std::vector<LogRecord> read_log(const std::filesystem::path& file);
    static void write_log(const std::vector<LogRecord>& log, const std::filesystem::path& file);
    static void append_log(const LogRecord& record, const std::filesystem::path& file);

private:
    void apply_registry(SessionState& st, const std::string& sql,
                        const std::vector<TriggerMatch>& matches);

    std::unordered_map<std::string, SessionState> sessions_;
    std::vector<std::string> order_;
};

}  // namespace reflectsql
