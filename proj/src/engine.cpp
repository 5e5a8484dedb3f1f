#include "reflectsql/engine.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>

#include "reflectsql/sql_matcher.hpp"
#include "reflectsql/validator.hpp"

namespace reflectsql {

std::string sanitize_token(const std::string& raw) {
    std::string out;
    out.reserve(raw.size());
    for (char c : raw) {
        const bool keep = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_';
        out.push_back(keep ? c : '_');
    }
    if (out.empty()) out = "session";
    return out;
}

namespace {

std::unique_ptr<CompletionBackend> make_backend(const EngineConfig& cfg) {
    if (cfg.backend == "mock") return std::make_unique<MockBackend>();
    if (cfg.backend == "live") {
        std::string key = cfg.api_key;
        if (key.empty()) {
            if (const char* env = std::getenv("LLM_API_KEY")) key = env;
        }
        return std::make_unique<HttpBackend>(cfg.base_url, key, cfg.max_in_flight);
    }
    throw ConfigError("unknown completion backend \"" + cfg.backend +
                      "\" (expected mock or live)");
}

}  // namespace

Engine::Engine(EngineConfig cfg)
    : cfg_(std::move(cfg)),
      builder_(cfg_.templates_dir ? PromptBuilder(*cfg_.templates_dir) : PromptBuilder()),
      backend_(make_backend(cfg_)),
      replay_backend_(std::make_unique<MockBackend>()) {
    builder_.set_generation_params(cfg_.model, cfg_.temperature, cfg_.max_tokens);
    builder_.set_chunking(cfg_.chunk_messages);
    if (cfg_.log_dir) std::filesystem::create_directories(*cfg_.log_dir);
}

void Engine::set_backend(std::unique_ptr<CompletionBackend> backend) {
    if (!backend) throw ConfigError("engine backend must not be null");
    backend_ = std::move(backend);
}

SessionState& Engine::ensure_session(const std::string& session_id) {
    if (SessionState* existing = store_.find(session_id)) return *existing;
    SessionState& st = store_.session(session_id);
    st.scheduler.config = cfg_.scheduler;
    return st;
}

SessionState& Engine::open_session(const std::string& session_id) {
    SessionState& st = ensure_session(session_id);
    const std::lock_guard<std::mutex> lock(book_mutex_);
    reflection_seq_[session_id];
    shown_[session_id];
    return st;
}

Reflection Engine::build_reflection(const TriggerMatch& m, const SessionState& st, double ts) {
    Reflection r;
    {
        const std::lock_guard<std::mutex> lock(book_mutex_);
        r.id = st.id + "-r" + std::to_string(++reflection_seq_[st.id]);
    }
    r.intervention = intervention_type(m);
    r.session_id = st.id;
    r.task_id = st.task_id;
    if (const LogRecord* last = st.last_command()) r.trigger_sql = last->sql;
    r.created_at = ts;

    const std::optional<LlmPrompt> prompt = builder_.build_prompt(m, st);
    if (!prompt) {
        // Datatype comparison: the message is fixed, no completion needed.
        r.message = builder_.render_message(m, {}, st);
        return r;
    }
    try {
        CompletionRequest req;
        req.prompt = prompt->text;
        req.model = prompt->model;
        req.temperature = prompt->temperature;
        req.max_tokens = prompt->max_tokens;
        req.timeout_s = cfg_.timeout_s;
        req.retries = cfg_.retries;
        CompletionBackend& backend = replaying_ ? *replay_backend_ : *backend_;
        const CompletionResult result = backend.complete(req);
        const ValidationOutcome outcome = validate_alternatives(result.text, *prompt, &st);
        if (outcome.accept) {
            r.alternatives = outcome.accepted;
            r.message = builder_.render_message(m, outcome.accepted, st);
            return r;
        }
    } catch (const BackendError&) {
        // fall through to the static fallback
    }
    r.origin = ReflectionOrigin::StaticFallback;
    r.alternatives.clear();
    r.message = builder_.static_fallback(r.intervention);
    return r;
}

std::vector<TriggerOutcome> Engine::process_command(const std::string& session_id,
                                                    const std::string& raw_sql, double ts,
                                                    std::optional<std::string> author) {
    SessionState& st = ensure_session(session_id);
    const std::size_t log_before = st.log.size();

    std::vector<TriggerOutcome> outcomes;
    for (const std::string& stmt : split_statements(raw_sql)) {
        SqlEvent ev;
        ev.session_id = session_id;
        ev.task_id = st.task_id;
        ev.author = author;
        ev.timestamp = ts;
        ev.raw_sql = stmt;
        for (TriggerMatch& m : store_.record_command(ev)) {
            TriggerOutcome out;
            out.reflection = build_reflection(m, st, ts);
            out.match = std::move(m);
            out.decision = store_.offer_reflection(session_id, out.reflection, ts);
            if (out.decision.shown) {
                const std::lock_guard<std::mutex> lock(book_mutex_);
                shown_[session_id].push_back(*out.decision.shown);
            }
            outcomes.push_back(std::move(out));
        }
    }
    persist_new_records(st, log_before);
    return outcomes;
}

std::vector<Reflection> Engine::advance_task(const std::string& session_id, int task, double ts) {
    SessionState& st = ensure_session(session_id);
    const std::size_t log_before = st.log.size();
    std::vector<Reflection> flushed = store_.advance_task(session_id, task, ts);
    if (!flushed.empty()) {
        const std::lock_guard<std::mutex> lock(book_mutex_);
        for (const Reflection& r : flushed) shown_[session_id].push_back(r);
    }
    persist_new_records(st, log_before);
    return flushed;
}

std::optional<Reflection> Engine::tick(const std::string& session_id, double now) {
    ensure_session(session_id);
    std::optional<Reflection> shown = store_.tick_session(session_id, now);
    if (shown) {
        const std::lock_guard<std::mutex> lock(book_mutex_);
        shown_[session_id].push_back(*shown);
    }
    return shown;
}

std::vector<Reflection> Engine::shown(const std::string& session_id, double since_ts) const {
    std::vector<Reflection> out;
    const std::lock_guard<std::mutex> lock(book_mutex_);
    const auto it = shown_.find(session_id);
    if (it == shown_.end()) return out;
    for (const Reflection& r : it->second) {
        if (r.shown_at && *r.shown_at > since_ts) out.push_back(r);
    }
    return out;
}

void Engine::load_logs() {
    if (!cfg_.log_dir || !std::filesystem::exists(*cfg_.log_dir)) return;
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(*cfg_.log_dir)) {
        if (entry.path().extension() == ".jsonl") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());

    replaying_ = true;
    try {
        for (const auto& file : files) {
            const std::vector<LogRecord> records = SessionStore::read_log(file);
            if (records.empty()) {
                ensure_session(file.stem().string());
                continue;
            }
            for (const LogRecord& rec : records) {
                if (rec.kind == LogRecord::Kind::TaskAdvance) {
                    advance_task(rec.session, rec.task, rec.ts);
                } else {
                    process_command(rec.session, rec.sql, rec.ts, rec.author);
                }
            }
        }
    } catch (...) {
        replaying_ = false;
        throw;
    }
    replaying_ = false;
}

void Engine::persist_new_records(const SessionState& st, std::size_t from) {
    if (replaying_ || !cfg_.log_dir) return;
    const std::filesystem::path file = *cfg_.log_dir / (sanitize_token(st.id) + ".jsonl");
    for (std::size_t i = from; i < st.log.size(); ++i) SessionStore::append_log(st.log[i], file);
}

}  // namespace reflectsql
