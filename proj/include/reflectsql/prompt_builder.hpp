#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "reflectsql/session_store.hpp"
#include "reflectsql/types.hpp"

namespace reflectsql {

// A ready-to-send completion prompt plus the generation parameters and the
// number of alternatives the template text demands.
struct LlmPrompt {
    InterventionType intervention = InterventionType::COMPOSITE_IND_COL_ORDER;
    std::string text;
    int expected_alternatives = 0;
    std::string model = "gpt-3.5-turbo-instruct";
    double temperature = 0.7;
    int max_tokens = 256;
    // True when the table's creation command was not in the registry and
    // the creation-context block was omitted from the prompt.
    bool degraded = false;
};

// How many alternatives each intervention type requires. Zero means the
// type never calls the completion backend.
int expected_alternatives_for(InterventionType type);

// Splits a rendered message into PART (i/n) chunks when its body exceeds
// `limit` characters; returns the message unchanged otherwise. Splits at
// line boundaries only.
std::string chunk_message(const std::string& message, std::size_t limit = 600);

class PromptBuilder {
public:
    PromptBuilder() = default;
    // Replaces the built-in templates with files named
    // <intervention_type_lowercase>.txt in `dir` (missing files keep the
    // built-in text). Throws ConfigError when dir does not exist.
    explicit PromptBuilder(const std::filesystem::path& dir);

    void set_generation_params(std::string model, double temperature, int max_tokens);
    void set_chunking(bool enabled, std::size_t limit = 600);

    // Instantiates the per-type prompt template. Absent for
    // DATATYPE_COMPARISON, which is answered by a fixed comparison message
    // instead of a completion call. The trigger command is taken from the
    // session's last recorded command, so call this right after
    // record_command for the match it returned.
    std::optional<LlmPrompt> build_prompt(const TriggerMatch& m, const SessionState& state) const;

    // Wraps validated alternatives in the per-type discussion frame. For
    // DATATYPE_COMPARISON, alternatives are ignored and the message
    // compares the column's prior datatype (from the registry) with the
    // new one.
    std::string render_message(const TriggerMatch& m, const std::vector<std::string>& alternatives,
                               const SessionState& state) const;

    // Fixed per-type message used when generation or validation failed.
    std::string static_fallback(InterventionType type) const;

    const std::string& template_text(InterventionType type) const;
    static const std::string& builtin_template(InterventionType type);

private:
    std::string render_prompt_text(InterventionType type, const std::string& trigger_command,
                                   const std::optional<std::string>& creation_command,
                                   const std::string& query, bool& degraded) const;

    std::string templates_[kInterventionTypeCount] = {};  // empty = use built-in
    std::string model_ = "gpt-3.5-turbo-instruct";
    double temperature_ = 0.7;
    int max_tokens_ = 256;
    bool chunking_ = false;
    std::size_t chunk_limit_ = 600;
};

}  // namespace reflectsql
