#include "reflectsql/prompt_builder.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "reflectsql/sql_matcher.hpp"

namespace reflectsql {

namespace {

constexpr const char* kMessagePrefix = "**DISCUSSION PROMPT:**\n";

// The two index templates open with the creation-command block; when the
// registry has no creation command the prompt starts at the trigger block
// instead.
constexpr const char* kCompositeOrderTemplate =
    "Look at the following SQL table creation command:\n"
    "{creation_command}\n"
    "Now look at this command to create a composite index:\n"
    "{trigger_command}\n"
    "Generate three plausible alternative composite indices, including variants that switch "
    "the column order from the original command. Just generate the alternatives don't write "
    "any text or explanations:";

constexpr const char* kCompositeVsSingleTemplate =
    "Look at the following SQL table creation command:\n"
    "{creation_command}\n"
    "Now look at this command to create a single column index:\n"
    "{trigger_command}\n"
    "Generate exactly one plausible composite index and exactly one single column index for "
    "optimizing the query. Just generate the alternatives don't write any text or "
    "explanations:";

constexpr const char* kDenormalizationWhenTemplate =
    "Look at the following SQL queries and useful denormalizations:\n"
    "SQL Query: SELECT b.name, t.avg_stars FROM businesses b INNER JOIN (select business_id, "
    "avg(stars) avg_stars FROM reviews GROUP BY business_id) t ON "
    "b.business_id=t.business_id WHERE avg_stars = 5;\n"
    "Helpful Denormalization: CREATE TABLE business_star_reviews AS (SELECT b.business_id, "
    "b.name, t.avg_stars FROM businesses b INNER JOIN (SELECT business_id, avg(stars) "
    "avg_stars FROM reviews GROUP BY business_id) t ON b.business_id = t.business_id);\n"
    "SQL Query: {query}\n"
    "Helpful Denormalization:";

constexpr const char* kTableChoiceTemplate =
    "Given the SQL command to create a denormalized table, generate alternatives that remove "
    "one of the inner joins:\n"
    "COMMAND: CREATE TABLE result2 AS (SELECT employees.emp_no, employees.first_name, "
    "employees.last_name FROM employees INNER JOIN dept_emp_list ON "
    "employees.emp_no=dept_emp_list.emp_no INNER JOIN titles ON "
    "dept_emp_list.emp_no=titles.emp_no)\n"
    "\n"
    "ALTERNATIVE: CREATE TABLE result2 AS (SELECT employees.emp_no, employees.first_name, "
    "employees.last_name FROM employees INNER JOIN dept_emp_list ON "
    "employees.emp_no=dept_emp_list.emp_no)\n"
    "\n"
    "COMMAND: {trigger_command}\n"
    "ALTERNATIVE:";

std::string replace_all(std::string text, const std::string& needle, const std::string& value) {
    std::size_t pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
        text.replace(pos, needle.size(), value);
        pos += value.size();
    }
    return text;
}

// Drops the line holding {creation_command} and its introducing line (the
// one right before it ending with ':').
std::string strip_creation_block(const std::string& tmpl) {
    std::vector<std::string> lines;
    std::istringstream in(tmpl);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    std::string out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].find("{creation_command}") != std::string::npos) continue;
        if (i + 1 < lines.size() && lines[i + 1].find("{creation_command}") != std::string::npos &&
            !lines[i].empty() && lines[i].back() == ':')
            continue;
        if (!out.empty()) out += '\n';
        out += lines[i];
    }
    return out;
}

std::string rstrip_newlines(std::string s) {
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
    return s;
}

std::string ensure_semicolon(const std::string& sql) {
    if (!sql.empty() && sql.back() == ';') return sql;
    return sql + ";";
}

// Leading type word of a datatype text: "VARCHAR(20)" -> "VARCHAR".
std::string base_type(const std::string& datatype) {
    std::size_t end = 0;
    while (end < datatype.size() &&
           (std::isalnum(static_cast<unsigned char>(datatype[end])) || datatype[end] == '_'))
        ++end;
    return datatype.substr(0, end);
}

bool iequal_str(const std::string& a, const std::string& b) {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) ==
                      std::tolower(static_cast<unsigned char>(y));
           });
}

std::string template_file_name(InterventionType type) {
    std::string name = to_string(type);
    std::transform(name.begin(), name.end(), name.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return name + ".txt";
}

// Trigger statement text for prompt injection: the session's most recent
// command, with a structural reconstruction as a safety net.
std::string trigger_text(const TriggerMatch& m, const SessionState& state) {
    if (const LogRecord* last = state.last_command()) return last->sql;
    struct Rebuild {
        std::string operator()(const DatatypeComparisonMatch& d) const {
            return "ALTER TABLE " + d.table + " MODIFY " + d.column + " " + d.new_datatype;
        }
        std::string operator()(const SingleColumnIndexMatch& s) const {
            return "CREATE INDEX " + s.index + " ON " + s.table + " (" + s.column + ")";
        }
        std::string operator()(const CompositeIndexMatch& c) const {
            std::string cols;
            for (const auto& col : c.columns) {
                if (!cols.empty()) cols += ", ";
                cols += col;
            }
            return "CREATE INDEX " + c.index + " ON " + c.table + " (" + cols + ")";
        }
        std::string operator()(const InnerJoinSelectMatch& j) const { return j.query_text; }
        std::string operator()(const CreateTableAsJoinMatch& t) const {
            return "CREATE TABLE " + t.table + " AS (" + t.query_text + ")";
        }
    };
    return std::visit(Rebuild{}, m);
}

}  // namespace

int expected_alternatives_for(InterventionType type) {
    switch (type) {
        case InterventionType::DATATYPE_COMPARISON: return 0;
        case InterventionType::COMPOSITE_VS_MULTI_SINGLE: return 2;
        case InterventionType::COMPOSITE_IND_COL_ORDER: return 3;
        case InterventionType::DENORMALIZATION_WHEN: return 1;
        case InterventionType::TABLE_CHOICE_DENORMALIZATION: return 1;
    }
    return 0;
}

std::string chunk_message(const std::string& message, std::size_t limit) {
    if (message.size() <= limit) return message;
    const std::string prefix_line = "**DISCUSSION PROMPT:**";
    std::vector<std::string> lines;
    std::istringstream in(message);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    if (!lines.empty() && lines.front() == prefix_line) lines.erase(lines.begin());

    std::vector<std::string> parts;
    std::string current;
    for (const auto& l : lines) {
        const std::size_t added = current.empty() ? l.size() : current.size() + 1 + l.size();
        if (!current.empty() && added > limit) {
            parts.push_back(current);
            current = l;
        } else {
            if (!current.empty()) current += '\n';
            current += l;
        }
    }
    if (!current.empty()) parts.push_back(current);
    if (parts.size() <= 1) return message;

    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += '\n';
        out += "**DISCUSSION PROMPT: PART (" + std::to_string(i + 1) + "/" +
               std::to_string(parts.size()) + ")**\n" + parts[i];
    }
    return out;
}

const std::string& PromptBuilder::builtin_template(InterventionType type) {
    static const std::string empty;
    static const std::string order = kCompositeOrderTemplate;
    static const std::string vs_single = kCompositeVsSingleTemplate;
    static const std::string denorm = kDenormalizationWhenTemplate;
    static const std::string table_choice = kTableChoiceTemplate;
    switch (type) {
        case InterventionType::DATATYPE_COMPARISON: return empty;
        case InterventionType::COMPOSITE_VS_MULTI_SINGLE: return vs_single;
        case InterventionType::COMPOSITE_IND_COL_ORDER: return order;
        case InterventionType::DENORMALIZATION_WHEN: return denorm;
        case InterventionType::TABLE_CHOICE_DENORMALIZATION: return table_choice;
    }
    return empty;
}

PromptBuilder::PromptBuilder(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir))
        throw ConfigError("template directory " + dir.string() + " does not exist");
    for (int i = 0; i < kInterventionTypeCount; ++i) {
        const auto type = static_cast<InterventionType>(i);
        const std::filesystem::path file = dir / template_file_name(type);
        if (!std::filesystem::exists(file)) continue;
        std::ifstream in(file);
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        templates_[i] = rstrip_newlines(std::move(text));
    }
}

void PromptBuilder::set_generation_params(std::string model, double temperature, int max_tokens) {
    model_ = std::move(model);
    temperature_ = temperature;
    max_tokens_ = max_tokens;
}

void PromptBuilder::set_chunking(bool enabled, std::size_t limit) {
    chunking_ = enabled;
    chunk_limit_ = limit;
}

const std::string& PromptBuilder::template_text(InterventionType type) const {
    const std::string& overridden = templates_[static_cast<int>(type)];
    return overridden.empty() ? builtin_template(type) : overridden;
}

std::string PromptBuilder::render_prompt_text(InterventionType type,
                                              const std::string& trigger_command,
                                              const std::optional<std::string>& creation_command,
                                              const std::string& query, bool& degraded) const {
    std::string tmpl = template_text(type);
    const bool wants_creation = tmpl.find("{creation_command}") != std::string::npos;
    if (wants_creation && !creation_command) {
        tmpl = strip_creation_block(tmpl);
        degraded = true;
    } else if (wants_creation) {
        tmpl = replace_all(std::move(tmpl), "{creation_command}", *creation_command);
    }
    tmpl = replace_all(std::move(tmpl), "{trigger_command}", trigger_command);
    tmpl = replace_all(std::move(tmpl), "{query}", query);
    return tmpl;
}

std::optional<LlmPrompt> PromptBuilder::build_prompt(const TriggerMatch& m,
                                                     const SessionState& state) const {
    const InterventionType type = intervention_type(m);
    if (type == InterventionType::DATATYPE_COMPARISON) return std::nullopt;

    LlmPrompt prompt;
    prompt.intervention = type;
    prompt.expected_alternatives = expected_alternatives_for(type);
    prompt.model = model_;
    prompt.temperature = temperature_;
    prompt.max_tokens = max_tokens_;

    const std::string trigger = trigger_text(m, state);
    std::optional<std::string> creation;
    std::string query;
    if (const auto* idx = std::get_if<SingleColumnIndexMatch>(&m)) {
        creation = state.lookup_table_creation(idx->table);
    } else if (const auto* comp = std::get_if<CompositeIndexMatch>(&m)) {
        creation = state.lookup_table_creation(comp->table);
    } else if (const auto* join = std::get_if<InnerJoinSelectMatch>(&m)) {
        query = join->query_text;
    }
    prompt.text = render_prompt_text(type, trigger, creation, query, prompt.degraded);
    return prompt;
}

std::string PromptBuilder::render_message(const TriggerMatch& m,
                                          const std::vector<std::string>& alternatives,
                                          const SessionState& state) const {
    const InterventionType type = intervention_type(m);
    std::string out = kMessagePrefix;
    switch (type) {
        case InterventionType::DATATYPE_COMPARISON: {
            const auto& d = std::get<DatatypeComparisonMatch>(m);
            const std::string new_base = base_type(d.new_datatype);
            std::optional<std::string> prior;
            if (const TableInfo* info = state.find_table(d.table)) {
                std::string key = d.column;
                std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) {
                    return static_cast<char>(std::tolower(c));
                });
                auto it = info->prior_types.find(key);
                if (it != info->prior_types.end()) prior = it->second;
            }
            if (!prior) {
                out += "Compare tradeoffs of using the previous type vs " + new_base;
            } else if (iequal_str(base_type(*prior), new_base)) {
                // Same family, so the parameters are the interesting part.
                out += "Compare tradeoffs of using " + *prior + " vs " + d.new_datatype;
            } else {
                out += "Compare tradeoffs of using " + base_type(*prior) + " vs " + new_base;
            }
            break;
        }
        case InterventionType::COMPOSITE_IND_COL_ORDER: {
            out += "Consider the following alternative composite indices:\n";
            for (const auto& alt : alternatives) out += ensure_semicolon(alt) + "\n";
            out += "Reflect on why the order of columns matter in a composite index.";
            break;
        }
        case InterventionType::COMPOSITE_VS_MULTI_SINGLE: {
            // Label by structure, falling back to generation order.
            std::string composite = alternatives.size() > 0 ? alternatives[0] : "";
            std::string single = alternatives.size() > 1 ? alternatives[1] : "";
            for (const auto& alt : alternatives) {
                auto parsed = classify(normalize(alt));
                if (!parsed) continue;
                if (std::holds_alternative<CompositeIndexMatch>(*parsed)) composite = alt;
                if (std::holds_alternative<SingleColumnIndexMatch>(*parsed)) single = alt;
            }
            out += "Consider the alternative composite index and another single column index:\n";
            out += "Composite index: " + composite + "\n";
            out += "Single column index: " + single + "\n";
            out +=
                "When should you choose a composite index or multiple single column indices "
                "for optimization?";
            break;
        }
        case InterventionType::DENORMALIZATION_WHEN: {
            out += "Consider this SQL command for denormalization:\n";
            if (!alternatives.empty()) out += ensure_semicolon(alternatives[0]) + "\n";
            out += "What are the trade-offs of using it?";
            break;
        }
        case InterventionType::TABLE_CHOICE_DENORMALIZATION: {
            out += "Consider this alternative denormalization:\n";
            if (!alternatives.empty()) out += alternatives[0] + "\n";
            out +=
                "Why would/wouldn't this be appropriate? Think about the tradeoffs behind "
                "choosing tables to join for denormalization.";
            break;
        }
    }
    if (chunking_) out = chunk_message(out, chunk_limit_);
    return out;
}

std::string PromptBuilder::static_fallback(InterventionType type) const {
    std::string out = kMessagePrefix;
    switch (type) {
        case InterventionType::DATATYPE_COMPARISON:
            out += "Compare tradeoffs of using the previous datatype vs the new one.";
            break;
        case InterventionType::COMPOSITE_VS_MULTI_SINGLE:
            out +=
                "When should you choose a composite index or multiple single column indices "
                "for optimization?";
            break;
        case InterventionType::COMPOSITE_IND_COL_ORDER:
            out += "Reflect on why the order of columns matter in a composite index.";
            break;
        case InterventionType::DENORMALIZATION_WHEN:
            out += "What are the trade-offs of using denormalization for this query?";
            break;
        case InterventionType::TABLE_CHOICE_DENORMALIZATION:
            out +=
                "Think about the tradeoffs behind choosing tables to join for "
                "denormalization.";
            break;
    }
    return out;
}

}  // namespace reflectsql
