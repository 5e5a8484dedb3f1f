#include "reflectsql/session_store.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include <json.hpp>

namespace reflectsql {

namespace {

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

}  // namespace

const ColumnDef* TableInfo::find_column(const std::string& column) const {
    const std::string key = to_lower(column);
    for (const auto& col : columns)
        if (to_lower(col.name) == key) return &col;
    return nullptr;
}

const TableInfo* SessionState::find_table(const std::string& name) const {
    auto it = tables.find(to_lower(name));
    return it == tables.end() ? nullptr : &it->second;
}

const LogRecord* SessionState::last_command() const {
    for (auto it = log.rbegin(); it != log.rend(); ++it)
        if (it->kind == LogRecord::Kind::Command) return &*it;
    return nullptr;
}

std::optional<std::string> SessionState::lookup_table_creation(const std::string& table) const {
    const TableInfo* info = find_table(table);
    if (!info || info->creation_command.empty()) return std::nullopt;
    return info->creation_command;
}

std::optional<std::string> SessionState::lookup_column_type(const std::string& table,
                                                            const std::string& column) const {
    const TableInfo* info = find_table(table);
    if (!info) return std::nullopt;
    const ColumnDef* col = info->find_column(column);
    if (!col) return std::nullopt;
    return col->datatype;
}

SessionState& SessionStore::session(const std::string& id) {
    auto it = sessions_.find(id);
    if (it != sessions_.end()) return it->second;
    SessionState st;
    st.id = id;
    order_.push_back(id);
    return sessions_.emplace(id, std::move(st)).first->second;
}

SessionState* SessionStore::find(const std::string& id) {
    auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : &it->second;
}

const SessionState* SessionStore::find(const std::string& id) const {
    auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : &it->second;
}

std::vector<std::string> SessionStore::session_ids() const { return order_; }

std::vector<TriggerMatch> SessionStore::record_command(const SqlEvent& ev) {
    SessionState& st = session(ev.session_id);
    if (st.seen_event && ev.timestamp < st.last_ts)
        throw OrderingError("session " + st.id + ": timestamp " + std::to_string(ev.timestamp) +
                            " precedes " + std::to_string(st.last_ts));
    st.last_ts = ev.timestamp;
    st.seen_event = true;

    LogRecord rec;
    rec.kind = LogRecord::Kind::Command;
    rec.ts = ev.timestamp;
    rec.session = st.id;
    rec.task = st.task_id;
    rec.author = ev.author;
    rec.sql = ev.raw_sql;
    st.log.push_back(std::move(rec));

    std::vector<TriggerMatch> matches = classify_all(ev.raw_sql);
    apply_registry(st, ev.raw_sql, matches);
    return matches;
}

ScheduleDecision SessionStore::offer_reflection(const std::string& session_id, Reflection r,
                                                double now) {
    SessionState& st = session(session_id);
    ScheduleDecision decision = offer(st.scheduler, std::move(r), now);
    if (decision.shown) {
        st.fired.emplace_back(now, decision.shown->intervention);
        st.fired_this_task.emplace_back(now, decision.shown->intervention);
    }
    return decision;
}

std::vector<Reflection> SessionStore::advance_task(const std::string& session_id, int task,
                                                   double ts) {
    SessionState& st = session(session_id);
    if (task < st.task_id)
        throw Error("session " + st.id + ": task " + std::to_string(task) +
                    " would regress from " + std::to_string(st.task_id));
    if (st.seen_event && ts < st.last_ts)
        throw OrderingError("session " + st.id + ": timestamp " + std::to_string(ts) +
                            " precedes " + std::to_string(st.last_ts));
    if (task == st.task_id) return {};
    st.last_ts = ts;
    st.seen_event = true;
    st.task_id = task;
    st.fired_this_task.clear();

    LogRecord rec;
    rec.kind = LogRecord::Kind::TaskAdvance;
    rec.ts = ts;
    rec.session = st.id;
    rec.task = task;
    st.log.push_back(std::move(rec));

    std::vector<Reflection> flushed = set_task(st.scheduler, task, ts);
    for (const Reflection& r : flushed) {
        st.fired.emplace_back(ts, r.intervention);
        st.fired_this_task.emplace_back(ts, r.intervention);
    }
    return flushed;
}

std::optional<Reflection> SessionStore::tick_session(const std::string& session_id, double now) {
    SessionState& st = session(session_id);
    std::optional<Reflection> shown = tick(st.scheduler, now);
    if (shown) {
        st.fired.emplace_back(now, shown->intervention);
        st.fired_this_task.emplace_back(now, shown->intervention);
    }
    return shown;
}

void SessionStore::apply_registry(SessionState& st, const std::string& sql,
                                  const std::vector<TriggerMatch>& matches) {
    DdlSummary ddl = summarize_ddl(sql);
    if (!ddl.created_table.empty()) {
        TableInfo info;
        info.name = ddl.created_table;
        info.creation_command = sql;
        info.columns = ddl.created_columns;
        st.tables[to_lower(ddl.created_table)] = std::move(info);
    }
    for (const std::string& dropped : ddl.dropped_tables) st.tables.erase(to_lower(dropped));
    if (!ddl.altered_table.empty()) {
        auto [it, inserted] = st.tables.try_emplace(to_lower(ddl.altered_table));
        if (inserted) it->second.name = ddl.altered_table;
        for (const ColumnDef& col : ddl.added_columns)
            if (!it->second.find_column(col.name)) it->second.columns.push_back(col);
    }
    for (const TriggerMatch& m : matches) {
        const auto* mod = std::get_if<DatatypeComparisonMatch>(&m);
        if (!mod) continue;
        auto [it, inserted] = st.tables.try_emplace(to_lower(mod->table));
        if (inserted) it->second.name = mod->table;
        TableInfo& info = it->second;
        bool found = false;
        for (auto& col : info.columns) {
            if (to_lower(col.name) != to_lower(mod->column)) continue;
            if (to_lower(col.datatype) != to_lower(mod->new_datatype))
                info.prior_types[to_lower(mod->column)] = col.datatype;
            col.datatype = mod->new_datatype;
            found = true;
            break;
        }
        if (!found) info.columns.push_back(ColumnDef{mod->column, mod->new_datatype});
    }
}

namespace {

nlohmann::json record_to_json(const LogRecord& rec) {
    nlohmann::json j;
    j["ts"] = rec.ts;
    j["session"] = rec.session;
    j["task"] = rec.task;
    if (rec.author)
        j["author"] = *rec.author;
    else
        j["author"] = nullptr;
    j["sql"] = rec.sql;
    j["kind"] = rec.kind == LogRecord::Kind::Command ? "command" : "task_advance";
    return j;
}

LogRecord record_from_json(const nlohmann::json& j) {
    LogRecord rec;
    if (!j.is_object()) throw Error("not an object");
    if (!j.contains("ts") || !j.at("ts").is_number()) throw Error("missing numeric 'ts'");
    rec.ts = j.at("ts").get<double>();
    if (!j.contains("session") || !j.at("session").is_string())
        throw Error("missing string 'session'");
    rec.session = j.at("session").get<std::string>();
    if (!j.contains("task") || !j.at("task").is_number_integer())
        throw Error("missing integer 'task'");
    rec.task = j.at("task").get<int>();
    if (j.contains("author") && !j.at("author").is_null()) {
        if (!j.at("author").is_string()) throw Error("'author' must be string or null");
        rec.author = j.at("author").get<std::string>();
    }
    const std::string kind = j.value("kind", "command");
    if (kind == "command") {
        rec.kind = LogRecord::Kind::Command;
        if (!j.contains("sql") || !j.at("sql").is_string())
            throw Error("command record missing string 'sql'");
        rec.sql = j.at("sql").get<std::string>();
    } else if (kind == "task_advance") {
        rec.kind = LogRecord::Kind::TaskAdvance;
        rec.sql = j.value("sql", "");
    } else {
        throw Error("unknown kind '" + kind + "'");
    }
    return rec;
}

}  // namespace

void SessionStore::write_log(const std::vector<LogRecord>& log,
                             const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw Error("cannot open " + file.string() + " for writing");
    for (const LogRecord& rec : log) out << record_to_json(rec).dump() << '\n';
}

void SessionStore::append_log(const LogRecord& record, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::app);
    if (!out) throw Error("cannot open " + file.string() + " for appending");
    out << record_to_json(record).dump() << '\n';
}

std::vector<LogRecord> SessionStore::read_log(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ParseError("cannot open " + file.string());
    std::vector<LogRecord> records;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        try {
            records.push_back(record_from_json(nlohmann::json::parse(line)));
        } catch (const std::exception& e) {
            throw ParseError(file.string() + ": line " + std::to_string(lineno) + ": " +
                             e.what());
        }
    }
    return records;
}

void SessionStore::save_session(const std::string& session_id,
                                const std::filesystem::path& file) const {
    const SessionState* st = find(session_id);
    if (!st) throw Error("unknown session " + session_id);
    write_log(st->log, file);
}

SessionState& SessionStore::load_session(const std::filesystem::path& file) {
    const std::vector<LogRecord> records = read_log(file);
    // An empty log is a fresh session named after the file.
    if (records.empty()) return session(file.stem().string());
    const std::string& id = records.front().session;
    for (const LogRecord& rec : records)
        if (rec.session != id)
            throw Error(file.string() + ": mixes sessions '" + id + "' and '" + rec.session +
                        "'");
    for (const LogRecord& rec : records) {
        if (rec.kind == LogRecord::Kind::TaskAdvance) {
            advance_task(id, rec.task, rec.ts);
            continue;
        }
        SqlEvent ev;
        ev.session_id = id;
        ev.task_id = rec.task;
        ev.author = rec.author;
        ev.timestamp = rec.ts;
        ev.raw_sql = rec.sql;
        for (const TriggerMatch& m : record_command(ev)) {
            Reflection shell;
            shell.intervention = intervention_type(m);
            shell.session_id = id;
            shell.task_id = rec.task;
            shell.trigger_sql = rec.sql;
            shell.created_at = rec.ts;
            offer_reflection(id, std::move(shell), rec.ts);
        }
    }
    return session(id);
}

}  // namespace reflectsql
