#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "reflectsql/llm_gateway.hpp"
#include "reflectsql/prompt_builder.hpp"
#include "reflectsql/scheduler.hpp"
#include "reflectsql/session_store.hpp"

namespace reflectsql {

struct EngineConfig {
    SchedulerConfig scheduler;

    std::string backend = "mock";  // "mock" or "live"
    std::string base_url = "https://api.openai.com/v1";
    std::string api_key;  // required for the live backend
    std::string model = "gpt-3.5-turbo-instruct";
    double temperature = 0.7;
    int max_tokens = 256;
    double timeout_s = 30.0;
    int retries = 2;
    int max_in_flight = 4;

    bool chunk_messages = false;
    std::optional<std::filesystem::path> templates_dir;

    // When set, every session event is appended to <log_dir>/<session>.jsonl
    // as it is recorded, and load_logs() can rebuild the full state.
    std::optional<std::filesystem::path> log_dir;
};

// One classified trigger and what became of it.
struct TriggerOutcome {
    TriggerMatch match;
    Reflection reflection;      // as generated (shown_at unset)
    ScheduleDecision decision;  // decision.shown may be a different, older reflection
};

// Ties the pipeline together: record -> classify -> prompt -> completion ->
// validate -> render (or static fallback) -> schedule. Used by the HTTP
// service, the CLI session mode, and the acceptance checks.
class Engine {
public:
    explicit Engine(EngineConfig cfg = {});

    // Creates the session if needed (with the engine's scheduler config)
    // and returns it. Callers that serve several sessions from different
    // threads must create each session before using it concurrently.
    SessionState& open_session(const std::string& session_id);

    // Records one submission (split into statements) and runs the full
    // pipeline for every trigger it produces.
    std::vector<TriggerOutcome> process_command(const std::string& session_id,
                                                const std::string& raw_sql, double ts,
                                                std::optional<std::string> author = std::nullopt);

    // Returns the reflections flushed by entering task 3, already shown.
    std::vector<Reflection> advance_task(const std::string& session_id, int task, double ts);

    // Timer drain for one session.
    std::optional<Reflection> tick(const std::string& session_id, double now);

    // Reflections delivered to `session_id`, in show order. Pass since_ts to
    // keep only those with shown_at strictly greater.
    std::vector<Reflection> shown(const std::string& session_id, double since_ts = -1.0) const;

    // Replays every <log_dir>/*.jsonl through the pipeline. Messages are
    // regenerated with the mock backend so a reload never calls out.
    void load_logs();

    SessionStore& store() { return store_; }
    const SessionStore& store() const { return store_; }
    PromptBuilder& prompt_builder() { return builder_; }
    std::string backend_name() const { return backend_->name(); }
    const EngineConfig& config() const { return cfg_; }

    // Swaps the completion backend (load_logs keeps its own mock).
    void set_backend(std::unique_ptr<CompletionBackend> backend);

private:
    SessionState& ensure_session(const std::string& session_id);
    Reflection build_reflection(const TriggerMatch& m, const SessionState& st, double ts);
    void persist_new_records(const SessionState& st, std::size_t from);

    EngineConfig cfg_;
    SessionStore store_;
    PromptBuilder builder_;
    std::unique_ptr<CompletionBackend> backend_;
    std::unique_ptr<CompletionBackend> replay_backend_;  // mock, for load_logs
    // Guards reflection_seq_ and shown_, the two maps different sessions'
    // pipelines touch concurrently. Never held across a completion call.
    mutable std::mutex book_mutex_;
    std::unordered_map<std::string, int> reflection_seq_;
    std::unordered_map<std::string, std::vector<Reflection>> shown_;
    bool replaying_ = false;
};

// File-name-safe token: alphanumerics, '-' and '_' survive, the rest
// becomes '_'. Empty input becomes "session".
std::string sanitize_token(const std::string& raw);

}  // namespace reflectsql
