#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "reflectsql/config.hpp"
#include "reflectsql/engine.hpp"
#include "reflectsql/replay.hpp"
#include "reflectsql/sql_matcher.hpp"

namespace py = pybind11;
using namespace reflectsql;

namespace {

py::dict match_dict(const TriggerMatch& match) {
    py::dict d;
    d["type"] = to_string(intervention_type(match));
    struct Fill {
        py::dict& d;
        void operator()(const DatatypeComparisonMatch& m) const {
            d["table"] = m.table;
            d["column"] = m.column;
            d["new_datatype"] = m.new_datatype;
        }
        void operator()(const SingleColumnIndexMatch& m) const {
            d["index"] = m.index;
            d["table"] = m.table;
            d["column"] = m.column;
        }
        void operator()(const CompositeIndexMatch& m) const {
            d["index"] = m.index;
            d["table"] = m.table;
            d["columns"] = m.columns;
        }
        void operator()(const InnerJoinSelectMatch& m) const {
            d["query"] = m.query_text;
            d["tables"] = m.tables;
            d["join_count"] = m.join_count;
        }
        void operator()(const CreateTableAsJoinMatch& m) const {
            d["table"] = m.table;
            d["query"] = m.query_text;
            d["tables"] = m.tables;
            d["join_count"] = m.join_count;
        }
    };
    std::visit(Fill{d}, match);
    return d;
}

py::dict reflection_dict(const Reflection& r) {
    py::dict d;
    d["id"] = r.id;
    d["type"] = to_string(r.intervention);
    d["session"] = r.session_id;
    d["task"] = r.task_id;
    d["trigger_sql"] = r.trigger_sql;
    d["message"] = r.message;
    d["alternatives"] = r.alternatives;
    d["origin"] = to_string(r.origin);
    d["created_at"] = r.created_at;
    if (r.shown_at) d["shown_at"] = *r.shown_at;
    else d["shown_at"] = py::none();
    return d;
}

py::dict outcome_dict(const TriggerOutcome& out) {
    py::dict d;
    d["match"] = match_dict(out.match);
    d["decision"] = to_string(out.decision.action);
    if (out.decision.shown) d["reflection"] = reflection_dict(*out.decision.shown);
    else d["reflection"] = py::none();
    return d;
}

py::dict report_dict(const ReplayReport& report) {
    py::dict d;
    py::list firings;
    for (const Firing& f : report.firings) {
        py::dict fd;
        fd["session"] = f.session;
        fd["ts"] = f.ts;
        fd["type"] = to_string(f.type);
        firings.append(fd);
    }
    d["firings"] = firings;
    d["intervals"] = report.intervals;
    d["histogram"] = report.histogram;
    d["total_intervals"] = report.total_intervals;
    d["percent_at_or_above_last_edge"] = report.percent_at_or_above_last_edge;
    return d;
}

EngineConfig engine_config(const std::string& backend, double tau_s,
                           const std::optional<std::string>& log_dir,
                           const std::optional<std::string>& config_file) {
    EngineConfig cfg;
    if (config_file) cfg = load_config(*config_file);
    cfg.backend = backend;
    cfg.scheduler.tau_s = tau_s;
    if (log_dir) cfg.log_dir = *log_dir;
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_reflectsql, m) {
    m.doc() = "reflection triggers for collaborative SQL optimization sessions";

    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);

    m.def(
        "classify",
        [](const std::string& sql) {
            py::list out;
            for (const std::string& stmt : split_statements(sql))
                for (const TriggerMatch& match : classify_all(stmt)) out.append(match_dict(match));
            return out;
        },
        py::arg("sql"),
        "Trigger matches raised by a submission (may hold several ;-separated statements).");

    py::class_<Engine>(m, "Engine")
        .def(py::init([](const std::string& backend, double tau_s,
                         const std::optional<std::string>& log_dir,
                         const std::optional<std::string>& config_file) {
                 auto engine =
                     std::make_unique<Engine>(engine_config(backend, tau_s, log_dir, config_file));
                 engine->load_logs();
                 return engine;
             }),
             py::arg("backend") = "mock", py::arg("tau_s") = 300.0,
             py::arg("log_dir") = py::none(), py::arg("config_file") = py::none())
        .def("open_session",
             [](Engine& e, const std::string& session_id) { e.open_session(session_id); },
             py::arg("session_id"))
        .def(
            "process_command",
            [](Engine& e, const std::string& session_id, const std::string& sql, double ts,
               const std::optional<std::string>& author) {
                py::list out;
                for (const TriggerOutcome& o : e.process_command(session_id, sql, ts, author))
                    out.append(outcome_dict(o));
                return out;
            },
            py::arg("session_id"), py::arg("sql"), py::arg("ts"), py::arg("author") = py::none(),
            "Record a submission; returns one outcome per trigger match.")
        .def(
            "advance_task",
            [](Engine& e, const std::string& session_id, int task, double ts) {
                py::list out;
                for (const Reflection& r : e.advance_task(session_id, task, ts))
                    out.append(reflection_dict(r));
                return out;
            },
            py::arg("session_id"), py::arg("task"), py::arg("ts"),
            "Move the session to a task; returns reflections flushed by the change.")
        .def(
            "tick",
            [](Engine& e, const std::string& session_id, double now) -> py::object {
                if (auto shown = e.tick(session_id, now)) return reflection_dict(*shown);
                return py::none();
            },
            py::arg("session_id"), py::arg("now"),
            "Timer drain; returns the reflection shown, if any.")
        .def(
            "shown",
            [](Engine& e, const std::string& session_id, double since_ts) {
                py::list out;
                for (const Reflection& r : e.shown(session_id, since_ts))
                    out.append(reflection_dict(r));
                return out;
            },
            py::arg("session_id"), py::arg("since_ts") = -1.0,
            "Reflections shown to the session after since_ts, oldest first.")
        .def_property_readonly("backend", &Engine::backend_name);

    m.def(
        "replay_log",
        [](const std::string& path, double tau_s, bool scheduling_enabled,
           const std::vector<double>& bucket_edges) {
            ReplayConfig cfg;
            cfg.tau_s = tau_s;
            cfg.scheduling_enabled = scheduling_enabled;
            cfg.bucket_edges = bucket_edges;
            return report_dict(replay(load_log(path), cfg));
        },
        py::arg("path"), py::arg("tau_s") = 300.0, py::arg("scheduling_enabled") = true,
        py::arg("bucket_edges") = std::vector<double>{60.0, 120.0, 300.0},
        "Replay a JSONL event log; returns firings, intervals and the gap histogram.");

    m.def(
        "interval_histogram",
        [](const std::vector<double>& intervals, const std::vector<double>& edges) {
            py::dict d;
            const auto [counts, percent] = interval_histogram(intervals, edges);
            d["histogram"] = counts;
            d["total_intervals"] = static_cast<long>(intervals.size());
            d["percent_at_or_above_last_edge"] = percent;
            d["labels"] = bucket_labels(edges);
            return d;
        },
        py::arg("intervals"), py::arg("edges") = std::vector<double>{60.0, 120.0, 300.0},
        "Bucket firing gaps into half-open ranges; the last bucket is unbounded.");

    m.def(
        "synthetic_log",
        [](unsigned seed, int sessions, int commands_per_session, const std::string& path) {
            SessionStore::write_log(synthetic_log(seed, sessions, commands_per_session), path);
            return path;
        },
        py::arg("seed"), py::arg("sessions") = 4, py::arg("commands_per_session") = 40,
        py::arg("path"),
        "Write a deterministic synthetic event log for replay experiments.");
}
