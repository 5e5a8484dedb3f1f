#pragma once

#include <memory>
#include <string>

#include "reflectsql/engine.hpp"

namespace reflectsql {

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    EngineConfig engine;
};

// JSON-over-HTTP front end for chat-bot integrations:
//
//   POST /v1/sessions                     {group_id, task_id?, tau_s?} -> 201 {session_id}
//   POST /v1/sessions/{id}/commands       {sql, author?, ts?} -> {classification, decision,
//                                                                reflection?, results}
//   GET  /v1/sessions/{id}/reflections    ?since_ts= -> {reflections}
//   POST /v1/sessions/{id}/task           {task_id} -> {flushed}
//   GET  /healthz                         -> {status, backend}
//
// Timestamps are seconds since session creation; when a command omits ts
// the server stamps elapsed wall time. Requests for one session are
// serialized; different sessions run concurrently. Completion failures
// never surface as HTTP errors: the response carries the static-fallback
// reflection instead.
class Service {
public:
    explicit Service(ServiceConfig cfg);
    ~Service();

    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    // Binds cfg.port and serves until stop(); false if the bind failed.
    bool run();

    // Binds an ephemeral port and serves from a background thread; returns
    // the port once the server accepts connections.
    int start_background();
    void stop();

    Engine& engine();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace reflectsql
