#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace reflectsql {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Event timestamp went backwards within a session.
class OrderingError : public Error {
public:
    using Error::Error;
};

// Malformed input (event-log line, config file). Message names the line.
class ParseError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Completion backend failure (transport, protocol, exhausted retries).
class BackendError : public Error {
public:
    using Error::Error;
};

// One SQL statement observed in a session, timestamped in seconds since
// session start. Multi-statement submissions are split upstream so raw_sql
// always holds a single normalized statement.
struct SqlEvent {
    std::string session_id;
    int task_id = 1;
    std::optional<std::string> author;
    double timestamp = 0.0;
    std::string raw_sql;
};

// The five reflection categories. Names double as the wire/log spelling.
enum class InterventionType {
    DATATYPE_COMPARISON,
    COMPOSITE_VS_MULTI_SINGLE,
    COMPOSITE_IND_COL_ORDER,
    DENORMALIZATION_WHEN,
    TABLE_CHOICE_DENORMALIZATION,
};

constexpr int kInterventionTypeCount = 5;

const std::string& to_string(InterventionType type);
std::optional<InterventionType> intervention_type_from_string(const std::string& name);

// ALTER TABLE <table> MODIFY <column> <datatype>
struct DatatypeComparisonMatch {
    std::string table;
    std::string column;
    std::string new_datatype;
};

// CREATE INDEX <index> ON <table>(<column>)
struct SingleColumnIndexMatch {
    std::string index;
    std::string table;
    std::string column;
};

// CREATE INDEX <index> ON <table>(<col1>, ... <coln>), n >= 2
struct CompositeIndexMatch {
    std::string index;
    std::string table;
    std::vector<std::string> columns;
};

// Top-level SELECT with one or more inner joins.
struct InnerJoinSelectMatch {
    std::string query_text;
    std::vector<std::string> tables;
    int join_count = 0;
};

// CREATE TABLE <table> AS SELECT ... with one or more inner joins.
struct CreateTableAsJoinMatch {
    std::string table;
    std::string query_text;
    std::vector<std::string> tables;
    int join_count = 0;
};

using TriggerMatch = std::variant<DatatypeComparisonMatch,
                                  SingleColumnIndexMatch,
                                  CompositeIndexMatch,
                                  InnerJoinSelectMatch,
                                  CreateTableAsJoinMatch>;

// Fixed, total mapping from match variant to reflection category.
InterventionType intervention_type(const TriggerMatch& match);

enum class ReflectionOrigin { Dynamic, StaticFallback };

const std::string& to_string(ReflectionOrigin origin);

// A discussion-prompt message bound to the command that triggered it.
// origin tells whether the alternatives were generated and validated
// (Dynamic) or the fixed per-type fallback text was used.
struct Reflection {
    std::string id;
    InterventionType intervention = InterventionType::DATATYPE_COMPARISON;
    std::string session_id;
    int task_id = 1;
    std::string trigger_sql;
    std::string message;
    std::vector<std::string> alternatives;
    ReflectionOrigin origin = ReflectionOrigin::Dynamic;
    double created_at = 0.0;
    std::optional<double> shown_at;
};

}  // namespace reflectsql
