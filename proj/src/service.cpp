#include "reflectsql/service.hpp"

#include <cctype>
#include <chrono>
#include <limits>
#include <mutex>
#include <shared_mutex>
#include <stdexcept>
#include <thread>
#include <unordered_map>

#include <httplib.h>
#include <json.hpp>

namespace reflectsql {

namespace {

using nlohmann::json;

json reflection_json(const Reflection& r) {
    json j;
    j["id"] = r.id;
    j["type"] = to_string(r.intervention);
    j["session"] = r.session_id;
    j["task"] = r.task_id;
    j["trigger_sql"] = r.trigger_sql;
    j["message"] = r.message;
    j["alternatives"] = r.alternatives;
    j["origin"] = r.origin == ReflectionOrigin::Dynamic ? "dynamic" : "static_fallback";
    j["created_at"] = r.created_at;
    if (r.shown_at) j["shown_at"] = *r.shown_at;
    return j;
}

void reply(httplib::Response& res, int status, const json& j) {
    res.status = status;
    res.set_content(j.dump(), "application/json");
}

void fail(httplib::Response& res, int status, const std::string& message) {
    json j;
    j["error"] = message;
    reply(res, status, j);
}

bool blank(const std::string& s) {
    for (char c : s)
        if (!std::isspace(static_cast<unsigned char>(c))) return false;
    return true;
}

}  // namespace

struct Service::Impl {
    ServiceConfig cfg;
    Engine engine;
    httplib::Server server;
    std::thread worker;

    // Session creation takes the registry exclusively; per-session requests
    // share it and serialize on their own session's mutex, so one session's
    // completion call never blocks another session.
    std::shared_mutex registry;
    std::unordered_map<std::string, std::unique_ptr<std::mutex>> locks;
    std::unordered_map<std::string, std::chrono::steady_clock::time_point> created;
    std::unordered_map<std::string, int> group_seq;

    explicit Impl(ServiceConfig c) : cfg(std::move(c)), engine(cfg.engine) {
        engine.load_logs();
        const auto now = std::chrono::steady_clock::now();
        for (const std::string& id : engine.store().session_ids()) {
            engine.open_session(id);
            locks.emplace(id, std::make_unique<std::mutex>());
            const SessionState* st = engine.store().find(id);
            const double last = st && st->seen_event ? st->last_ts : 0.0;
            created[id] = now - std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                    std::chrono::duration<double>(last));
            continue_sequence(id);
        }
        routes();
    }

    // Keeps "<group>-<n>" ids unique after a reload.
    void continue_sequence(const std::string& id) {
        const std::size_t dash = id.rfind('-');
        if (dash == std::string::npos || dash + 1 >= id.size()) return;
        const std::string tail = id.substr(dash + 1);
        if (tail.find_first_not_of("0123456789") != std::string::npos) return;
        try {
            int& seq = group_seq[id.substr(0, dash)];
            seq = std::max(seq, std::stoi(tail));
        } catch (const std::out_of_range&) {
        }
    }

    double elapsed(const std::string& id) const {
        const auto it = created.find(id);
        if (it == created.end()) return 0.0;
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - it->second)
            .count();
    }

    void routes() {
        server.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
            json j;
            j["status"] = "ok";
            j["backend"] = engine.backend_name();
            reply(res, 200, j);
        });

        server.Post("/v1/sessions", [this](const httplib::Request& req, httplib::Response& res) {
            const json body = json::parse(req.body, nullptr, false);
            if (!body.is_object()) return fail(res, 400, "request body must be a JSON object");
            if (!body.contains("group_id") || !body["group_id"].is_string() ||
                blank(body["group_id"].get<std::string>()))
                return fail(res, 400, "group_id must be a non-empty string");
            int task_id = 1;
            if (body.contains("task_id")) {
                if (!body["task_id"].is_number_integer() || body["task_id"].get<int>() < 1)
                    return fail(res, 400, "task_id must be a positive integer");
                task_id = body["task_id"].get<int>();
            }
            std::optional<double> tau;
            if (body.contains("tau_s")) {
                if (!body["tau_s"].is_number() || body["tau_s"].get<double>() < 0)
                    return fail(res, 400, "tau_s must be a non-negative number");
                tau = body["tau_s"].get<double>();
            }

            const std::unique_lock<std::shared_mutex> lock(registry);
            const std::string group = sanitize_token(body["group_id"].get<std::string>());
            const std::string id = group + "-" + std::to_string(++group_seq[group]);
            SessionState& st = engine.open_session(id);
            if (tau) st.scheduler.config.tau_s = *tau;
            if (task_id > 1) engine.advance_task(id, task_id, 0.0);
            locks.emplace(id, std::make_unique<std::mutex>());
            created[id] = std::chrono::steady_clock::now();

            json j;
            j["session_id"] = id;
            reply(res, 201, j);
        });

        server.Post("/v1/sessions/:id/commands",
                    [this](const httplib::Request& req, httplib::Response& res) {
                        const std::string id = req.path_params.at("id");
                        const std::shared_lock<std::shared_mutex> rlock(registry);
                        const auto lit = locks.find(id);
                        if (lit == locks.end()) return fail(res, 404, "unknown session " + id);

                        const json body = json::parse(req.body, nullptr, false);
                        if (!body.is_object() || !body.contains("sql") ||
                            !body["sql"].is_string())
                            return fail(res, 400, "sql must be a string");
                        const std::string sql = body["sql"].get<std::string>();
                        if (blank(sql)) return fail(res, 400, "sql must not be empty");
                        std::optional<std::string> author;
                        if (body.contains("author") && !body["author"].is_null()) {
                            if (!body["author"].is_string())
                                return fail(res, 400, "author must be a string or null");
                            author = body["author"].get<std::string>();
                        }
                        double ts = 0.0;
                        if (body.contains("ts")) {
                            if (!body["ts"].is_number())
                                return fail(res, 400, "ts must be a number");
                            ts = body["ts"].get<double>();
                        } else {
                            ts = elapsed(id);
                        }

                        const std::lock_guard<std::mutex> slock(*lit->second);
                        std::vector<TriggerOutcome> outcomes;
                        try {
                            outcomes = engine.process_command(id, sql, ts, author);
                        } catch (const Error& e) {
                            return fail(res, 400, e.what());
                        }

                        json j;
                        j["classification"] =
                            outcomes.empty() ? "none"
                                             : to_string(intervention_type(outcomes[0].match));
                        j["decision"] =
                            outcomes.empty() ? "none" : to_string(outcomes[0].decision.action);
                        const Reflection* first_shown = nullptr;
                        json results = json::array();
                        for (const TriggerOutcome& out : outcomes) {
                            json r;
                            r["classification"] = to_string(intervention_type(out.match));
                            r["decision"] = to_string(out.decision.action);
                            if (out.decision.shown) {
                                r["reflection"] = reflection_json(*out.decision.shown);
                                if (!first_shown) first_shown = &*out.decision.shown;
                            }
                            results.push_back(std::move(r));
                        }
                        if (first_shown) j["reflection"] = reflection_json(*first_shown);
                        j["results"] = std::move(results);
                        reply(res, 200, j);
                    });

        server.Get("/v1/sessions/:id/reflections",
                   [this](const httplib::Request& req, httplib::Response& res) {
                       const std::string id = req.path_params.at("id");
                       const std::shared_lock<std::shared_mutex> rlock(registry);
                       if (locks.find(id) == locks.end())
                           return fail(res, 404, "unknown session " + id);
                       double since = -std::numeric_limits<double>::infinity();
                       if (req.has_param("since_ts")) {
                           try {
                               std::size_t used = 0;
                               const std::string raw = req.get_param_value("since_ts");
                               since = std::stod(raw, &used);
                               if (used != raw.size()) throw std::invalid_argument(raw);
                           } catch (const std::exception&) {
                               return fail(res, 400, "since_ts must be a number");
                           }
                       }
                       json j;
                       j["reflections"] = json::array();
                       for (const Reflection& r : engine.shown(id, since))
                           j["reflections"].push_back(reflection_json(r));
                       reply(res, 200, j);
                   });

        server.Post("/v1/sessions/:id/task",
                    [this](const httplib::Request& req, httplib::Response& res) {
                        const std::string id = req.path_params.at("id");
                        const std::shared_lock<std::shared_mutex> rlock(registry);
                        const auto lit = locks.find(id);
                        if (lit == locks.end()) return fail(res, 404, "unknown session " + id);

                        const json body = json::parse(req.body, nullptr, false);
                        if (!body.is_object() || !body.contains("task_id") ||
                            !body["task_id"].is_number_integer())
                            return fail(res, 400, "task_id must be an integer");
                        const int task = body["task_id"].get<int>();
                        double ts = 0.0;
                        if (body.contains("ts")) {
                            if (!body["ts"].is_number())
                                return fail(res, 400, "ts must be a number");
                            ts = body["ts"].get<double>();
                        } else {
                            ts = elapsed(id);
                        }

                        const std::lock_guard<std::mutex> slock(*lit->second);
                        std::vector<Reflection> flushed;
                        try {
                            flushed = engine.advance_task(id, task, ts);
                        } catch (const OrderingError& e) {
                            return fail(res, 400, e.what());
                        } catch (const Error& e) {
                            return fail(res, 409, e.what());
                        }
                        json j;
                        j["flushed"] = json::array();
                        for (const Reflection& r : flushed)
                            j["flushed"].push_back(reflection_json(r));
                        reply(res, 200, j);
                    });
    }
};

Service::Service(ServiceConfig cfg) : impl_(std::make_unique<Impl>(std::move(cfg))) {}

Service::~Service() { stop(); }

bool Service::run() { return impl_->server.listen(impl_->cfg.host, impl_->cfg.port); }

int Service::start_background() {
    const int port = impl_->server.bind_to_any_port(impl_->cfg.host);
    if (port < 0) return port;
    impl_->worker = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return port;
}

void Service::stop() {
    impl_->server.stop();
    if (impl_->worker.joinable()) impl_->worker.join();
}

Engine& Service::engine() { return impl_->engine; }

}  // namespace reflectsql
