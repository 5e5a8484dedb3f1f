#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "reflectsql/types.hpp"

namespace reflectsql {

// Lexer token over a SQL statement. `text` is the raw lexeme (quotes and
// backticks included), `ident` the unquoted form used for comparisons.
struct SqlToken {
    enum class Kind { Word, Number, String, Punct };
    Kind kind = Kind::Word;
    std::string text;
    std::string ident;
    std::size_t begin = 0;  // offsets into the tokenized string
    std::size_t end = 0;
};

std::vector<SqlToken> tokenize_sql(std::string_view sql);

// Strips -- and /* */ comments, collapses whitespace runs to single spaces,
// trims, and drops a single trailing semicolon. Quoted strings are left
// untouched. Total: any input maps to some output.
std::string normalize(std::string_view raw);

// Splits on top-level semicolons (quote-aware) and normalizes each piece.
// Empty statements are dropped.
std::vector<std::string> split_statements(std::string_view raw);

// Classifies one normalized statement against the five trigger patterns.
// Returns the first match; multi-clause ALTERs yield their first MODIFY.
std::optional<TriggerMatch> classify(const std::string& cmd);

// Like classify, but an ALTER TABLE with several MODIFY clauses yields one
// DatatypeComparisonMatch per clause. Other patterns produce at most one.
std::vector<TriggerMatch> classify_all(const std::string& cmd);

// One column definition as written in DDL.
struct ColumnDef {
    std::string name;
    std::string datatype;
};

// Schema facts a statement contributes to the table registry. MODIFY
// clauses are not summarized here; they already surface as
// DatatypeComparisonMatch values.
struct DdlSummary {
    std::string created_table;  // CREATE TABLE of either form, else empty
    bool create_as_select = false;
    std::vector<ColumnDef> created_columns;  // explicit definitions only
    std::string altered_table;               // ALTER TABLE target, else empty
    std::vector<ColumnDef> added_columns;    // ALTER ... ADD [COLUMN]
    std::vector<std::string> dropped_tables;
};

DdlSummary summarize_ddl(const std::string& cmd);

// Output column names of a SELECT: the alias when one is given, otherwise
// the last component of the selected expression when it is a plain (possibly
// qualified) column. Starred and computed entries without aliases are
// skipped.
std::vector<std::string> select_list_columns(const std::string& select_stmt);

}  // namespace reflectsql
