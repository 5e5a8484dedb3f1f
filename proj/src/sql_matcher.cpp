#include "reflectsql/sql_matcher.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

namespace reflectsql {

namespace {

bool is_word_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

std::string to_upper(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return out;
}

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::toupper(static_cast<unsigned char>(x)) ==
                      std::toupper(static_cast<unsigned char>(y));
           });
}

const std::unordered_set<std::string>& clause_keywords() {
    static const std::unordered_set<std::string> kws = {
        "ON",    "WHERE", "GROUP",  "ORDER", "HAVING", "LIMIT",  "UNION",
        "INNER", "LEFT",  "RIGHT",  "FULL",  "CROSS",  "OUTER",  "JOIN",
        "AS",    "SET",   "VALUES", "INTO",  "USING",  "NATURAL"};
    return kws;
}

bool is_clause_keyword(const SqlToken& t) {
    return t.kind == SqlToken::Kind::Word && clause_keywords().count(to_upper(t.ident)) > 0;
}

}  // namespace

std::vector<SqlToken> tokenize_sql(std::string_view sql) {
    std::vector<SqlToken> tokens;
    std::size_t i = 0;
    const std::size_t n = sql.size();
    while (i < n) {
        const char c = sql[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        if (c == '-' && i + 1 < n && sql[i + 1] == '-') {
            while (i < n && sql[i] != '\n') ++i;
            continue;
        }
        if (c == '/' && i + 1 < n && sql[i + 1] == '*') {
            i += 2;
            while (i + 1 < n && !(sql[i] == '*' && sql[i + 1] == '/')) ++i;
            i = (i + 1 < n) ? i + 2 : n;
            continue;
        }
        SqlToken tok;
        tok.begin = i;
        if (c == '`') {
            std::size_t j = i + 1;
            while (j < n && sql[j] != '`') ++j;
            tok.kind = SqlToken::Kind::Word;
            tok.ident = std::string(sql.substr(i + 1, j - i - 1));
            i = (j < n) ? j + 1 : n;
        } else if (c == '\'' || c == '"') {
            const char quote = c;
            std::size_t j = i + 1;
            while (j < n) {
                if (sql[j] == '\\' && j + 1 < n) {
                    j += 2;
                    continue;
                }
                if (sql[j] == quote) {
                    if (j + 1 < n && sql[j + 1] == quote) {  // '' escape
                        j += 2;
                        continue;
                    }
                    break;
                }
                ++j;
            }
            tok.kind = SqlToken::Kind::String;
            tok.ident = std::string(sql.substr(i + 1, j - i - 1));
            i = (j < n) ? j + 1 : n;
        } else if (is_word_start(c)) {
            std::size_t j = i;
            while (j < n && is_word_char(sql[j])) ++j;
            tok.kind = SqlToken::Kind::Word;
            tok.ident = std::string(sql.substr(i, j - i));
            i = j;
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t j = i;
            while (j < n && (std::isalnum(static_cast<unsigned char>(sql[j])) || sql[j] == '.'))
                ++j;
            tok.kind = SqlToken::Kind::Number;
            tok.ident = std::string(sql.substr(i, j - i));
            i = j;
        } else {
            tok.kind = SqlToken::Kind::Punct;
            tok.ident = std::string(1, c);
            ++i;
        }
        tok.end = i;
        tok.text = std::string(sql.substr(tok.begin, tok.end - tok.begin));
        tokens.push_back(std::move(tok));
    }
    return tokens;
}

std::string normalize(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    bool pending_space = false;
    std::size_t i = 0;
    const std::size_t n = raw.size();
    auto flush_space = [&] {
        if (pending_space && !out.empty()) out.push_back(' ');
        pending_space = false;
    };
    while (i < n) {
        const char c = raw[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = true;
            ++i;
            continue;
        }
        if (c == '-' && i + 1 < n && raw[i + 1] == '-') {
            while (i < n && raw[i] != '\n') ++i;
            pending_space = true;
            continue;
        }
        if (c == '/' && i + 1 < n && raw[i + 1] == '*') {
            i += 2;
            while (i + 1 < n && !(raw[i] == '*' && raw[i + 1] == '/')) ++i;
            i = (i + 1 < n) ? i + 2 : n;
            pending_space = true;
            continue;
        }
        if (c == '\'' || c == '"') {
            flush_space();
            const char quote = c;
            out.push_back(raw[i++]);
            while (i < n) {
                out.push_back(raw[i]);
                if (raw[i] == '\\' && i + 1 < n) {
                    out.push_back(raw[i + 1]);
                    i += 2;
                    continue;
                }
                if (raw[i] == quote) {
                    if (i + 1 < n && raw[i + 1] == quote) {
                        out.push_back(raw[i + 1]);
                        i += 2;
                        continue;
                    }
                    ++i;
                    break;
                }
                ++i;
            }
            continue;
        }
        flush_space();
        out.push_back(c);
        ++i;
    }
    while (!out.empty() && std::isspace(static_cast<unsigned char>(out.back()))) out.pop_back();
    if (!out.empty() && out.back() == ';') out.pop_back();
    while (!out.empty() && std::isspace(static_cast<unsigned char>(out.back()))) out.pop_back();
    return out;
}

std::vector<std::string> split_statements(std::string_view raw) {
    std::vector<std::string> out;
    std::string current;
    std::size_t i = 0;
    const std::size_t n = raw.size();
    while (i < n) {
        const char c = raw[i];
        if (c == '-' && i + 1 < n && raw[i + 1] == '-') {
            while (i < n && raw[i] != '\n') current.push_back(raw[i]), ++i;
            continue;
        }
        if (c == '/' && i + 1 < n && raw[i + 1] == '*') {
            const std::size_t start = i;
            i += 2;
            while (i + 1 < n && !(raw[i] == '*' && raw[i + 1] == '/')) ++i;
            i = (i + 1 < n) ? i + 2 : n;
            current.append(raw.substr(start, i - start));
            continue;
        }
        if (c == '\'' || c == '"') {
            const char quote = c;
            current.push_back(raw[i++]);
            while (i < n) {
                current.push_back(raw[i]);
                if (raw[i] == '\\' && i + 1 < n) {
                    current.push_back(raw[i + 1]);
                    i += 2;
                    continue;
                }
                if (raw[i] == quote) {
                    ++i;
                    break;
                }
                ++i;
            }
            continue;
        }
        if (c == ';') {
            std::string stmt = normalize(current);
            if (!stmt.empty()) out.push_back(std::move(stmt));
            current.clear();
            ++i;
            continue;
        }
        current.push_back(c);
        ++i;
    }
    std::string stmt = normalize(current);
    if (!stmt.empty()) out.push_back(std::move(stmt));
    return out;
}

namespace {

struct TokenCursor {
    const std::vector<SqlToken>& toks;
    std::size_t pos = 0;

    bool done() const { return pos >= toks.size(); }
    const SqlToken* peek(std::size_t ahead = 0) const {
        return (pos + ahead < toks.size()) ? &toks[pos + ahead] : nullptr;
    }
    bool at_kw(std::string_view kw) const {
        const SqlToken* t = peek();
        return t && t->kind == SqlToken::Kind::Word && iequals(t->ident, kw);
    }
    bool eat_kw(std::string_view kw) {
        if (!at_kw(kw)) return false;
        ++pos;
        return true;
    }
    bool at_punct(char p) const {
        const SqlToken* t = peek();
        return t && t->kind == SqlToken::Kind::Punct && t->ident.size() == 1 && t->ident[0] == p;
    }
    bool eat_punct(char p) {
        if (!at_punct(p)) return false;
        ++pos;
        return true;
    }
};

// Reads <word> or <word>.<word>... returning the dotted, unquoted name.
std::optional<std::string> read_qualified_name(TokenCursor& cur) {
    const SqlToken* t = cur.peek();
    if (!t || t->kind != SqlToken::Kind::Word) return std::nullopt;
    std::string name = t->ident;
    ++cur.pos;
    while (cur.at_punct('.')) {
        const SqlToken* next = cur.peek(1);
        if (!next || next->kind != SqlToken::Kind::Word) break;
        name += '.';
        name += next->ident;
        cur.pos += 2;
    }
    return name;
}

// Skips a balanced (...) group; cursor must sit on '('. Returns false when
// the group never closes.
bool skip_balanced_parens(TokenCursor& cur) {
    if (!cur.at_punct('(')) return false;
    int depth = 0;
    while (!cur.done()) {
        if (cur.at_punct('(')) ++depth;
        if (cur.at_punct(')')) {
            --depth;
            ++cur.pos;
            if (depth == 0) return true;
            continue;
        }
        ++cur.pos;
    }
    return false;
}

struct JoinScan {
    int inner_joins = 0;
    std::vector<std::string> tables;
};

// After a FROM table or JOIN operand, swallow an optional [AS] alias.
void skip_alias(TokenCursor& cur) {
    if (cur.eat_kw("AS")) {
        const SqlToken* t = cur.peek();
        if (t && t->kind == SqlToken::Kind::Word) ++cur.pos;
        return;
    }
    const SqlToken* t = cur.peek();
    if (t && t->kind == SqlToken::Kind::Word && !is_clause_keyword(*t)) ++cur.pos;
}

// Reads a table name or a parenthesized subquery (alias becomes the name).
std::optional<std::string> read_table_operand(TokenCursor& cur) {
    if (cur.at_punct('(')) {
        if (!skip_balanced_parens(cur)) return std::nullopt;
        if (cur.eat_kw("AS")) {
            const SqlToken* t = cur.peek();
            if (t && t->kind == SqlToken::Kind::Word) {
                std::string alias = t->ident;
                ++cur.pos;
                return alias;
            }
            return std::nullopt;
        }
        const SqlToken* t = cur.peek();
        if (t && t->kind == SqlToken::Kind::Word && !is_clause_keyword(*t)) {
            std::string alias = t->ident;
            ++cur.pos;
            return alias;
        }
        return std::string();  // anonymous subquery
    }
    std::optional<std::string> name = read_qualified_name(cur);
    if (!name) return std::nullopt;
    skip_alias(cur);
    return name;
}

// Walks the token range [begin, end) of a SELECT and collects, at the
// range's own nesting level, the FROM tables, joined tables, and the number
// of inner joins (a bare JOIN counts as INNER JOIN; LEFT/RIGHT/FULL/CROSS
// do not). Joins inside nested subqueries are ignored.
JoinScan scan_select_joins(const std::vector<SqlToken>& toks, std::size_t begin, std::size_t end) {
    JoinScan scan;
    int depth = 0;
    bool in_from_list = false;
    std::size_t i = begin;
    while (i < end) {
        const SqlToken& t = toks[i];
        if (t.kind == SqlToken::Kind::Punct && t.ident == "(") {
            ++depth;
            ++i;
            continue;
        }
        if (t.kind == SqlToken::Kind::Punct && t.ident == ")") {
            --depth;
            ++i;
            continue;
        }
        if (depth != 0 || t.kind != SqlToken::Kind::Word) {
            ++i;
            continue;
        }
        const std::string kw = to_upper(t.ident);
        TokenCursor cur{toks, i};
        if (kw == "FROM") {
            ++cur.pos;
            while (true) {
                auto name = read_table_operand(cur);
                if (!name) break;
                if (!name->empty()) scan.tables.push_back(*name);
                if (!cur.at_punct(',')) break;
                ++cur.pos;
            }
            in_from_list = true;
            i = cur.pos;
            continue;
        }
        bool inner = false;
        bool is_join = false;
        if (kw == "JOIN") {
            inner = true;
            is_join = true;
            ++cur.pos;
        } else if (kw == "INNER" || kw == "LEFT" || kw == "RIGHT" || kw == "FULL" ||
                   kw == "CROSS") {
            inner = (kw == "INNER");
            ++cur.pos;
            cur.eat_kw("OUTER");
            if (cur.eat_kw("JOIN")) {
                is_join = true;
            }
        }
        if (is_join && in_from_list) {
            if (inner) ++scan.inner_joins;
            auto name = read_table_operand(cur);
            if (name && !name->empty()) scan.tables.push_back(*name);
            i = cur.pos;
            continue;
        }
        ++i;
    }
    return scan;
}

std::vector<TriggerMatch> match_alter_modify(const std::vector<SqlToken>& toks,
                                             const std::string& text) {
    std::vector<TriggerMatch> out;
    TokenCursor cur{toks, 0};
    if (!cur.eat_kw("ALTER") || !cur.eat_kw("TABLE")) return out;
    auto table = read_qualified_name(cur);
    if (!table) return out;

    // Clauses separated by top-level commas; only MODIFY [COLUMN] fires.
    while (!cur.done()) {
        if (!cur.eat_kw("MODIFY")) {
            // Skip ahead to the next top-level comma.
            int depth = 0;
            while (!cur.done()) {
                if (cur.at_punct('(')) ++depth;
                if (cur.at_punct(')')) --depth;
                if (depth == 0 && cur.at_punct(',')) {
                    ++cur.pos;
                    break;
                }
                ++cur.pos;
            }
            continue;
        }
        cur.eat_kw("COLUMN");
        auto column = read_qualified_name(cur);
        if (!column) return out;
        const SqlToken* type_tok = cur.peek();
        if (!type_tok || type_tok->kind != SqlToken::Kind::Word) return out;
        std::size_t type_begin = type_tok->begin;
        std::size_t type_end = type_tok->end;
        ++cur.pos;
        if (cur.at_punct('(')) {
            std::size_t open = cur.pos;
            if (!skip_balanced_parens(cur)) return out;
            type_end = toks[cur.pos - 1].end;
            (void)open;
        }
        while (cur.at_kw("UNSIGNED") || cur.at_kw("ZEROFILL")) {
            type_end = cur.peek()->end;
            ++cur.pos;
        }
        out.push_back(DatatypeComparisonMatch{
            *table, *column, text.substr(type_begin, type_end - type_begin)});
        // Consume the rest of this clause (constraints etc.) up to a comma.
        int depth = 0;
        while (!cur.done()) {
            if (cur.at_punct('(')) ++depth;
            if (cur.at_punct(')')) --depth;
            if (depth == 0 && cur.at_punct(',')) {
                ++cur.pos;
                break;
            }
            ++cur.pos;
        }
    }
    return out;
}

std::optional<TriggerMatch> match_create_index(const std::vector<SqlToken>& toks) {
    TokenCursor cur{toks, 0};
    if (!cur.eat_kw("CREATE")) return std::nullopt;
    if (cur.at_kw("UNIQUE") || cur.at_kw("FULLTEXT") || cur.at_kw("SPATIAL")) ++cur.pos;
    if (!cur.eat_kw("INDEX")) return std::nullopt;
    auto index = read_qualified_name(cur);
    if (!index || !cur.eat_kw("ON")) return std::nullopt;
    auto table = read_qualified_name(cur);
    if (!table || !cur.eat_punct('(')) return std::nullopt;

    std::vector<std::string> columns;
    while (true) {
        const SqlToken* t = cur.peek();
        if (!t || t->kind != SqlToken::Kind::Word) return std::nullopt;
        columns.push_back(t->ident);
        ++cur.pos;
        if (cur.at_punct('(')) {  // optional prefix length
            if (!skip_balanced_parens(cur)) return std::nullopt;
        }
        if (cur.at_kw("ASC") || cur.at_kw("DESC")) ++cur.pos;
        if (cur.eat_punct(',')) continue;
        if (cur.eat_punct(')')) break;
        return std::nullopt;
    }
    if (columns.empty()) return std::nullopt;
    for (std::size_t a = 0; a < columns.size(); ++a)
        for (std::size_t b = a + 1; b < columns.size(); ++b)
            if (iequals(columns[a], columns[b])) return std::nullopt;

    if (columns.size() == 1) return SingleColumnIndexMatch{*index, *table, columns[0]};
    return CompositeIndexMatch{*index, *table, columns};
}

std::optional<TriggerMatch> match_create_table_as_join(const std::vector<SqlToken>& toks,
                                                       const std::string& text) {
    TokenCursor cur{toks, 0};
    if (!cur.eat_kw("CREATE") || !cur.eat_kw("TABLE")) return std::nullopt;
    if (cur.at_kw("IF")) {  // IF NOT EXISTS
        cur.pos += 3;
    }
    auto table = read_qualified_name(cur);
    if (!table) return std::nullopt;

    // Accept AS (SELECT ...), AS SELECT ..., and (SELECT ...).
    bool wrapped = false;
    if (cur.eat_kw("AS")) {
        if (cur.at_punct('(')) {
            wrapped = true;
            ++cur.pos;
        }
    } else if (cur.at_punct('(') && cur.peek(1) && cur.peek(1)->kind == SqlToken::Kind::Word &&
               iequals(cur.peek(1)->ident, "SELECT")) {
        wrapped = true;
        ++cur.pos;
    } else {
        return std::nullopt;
    }
    if (!cur.at_kw("SELECT")) return std::nullopt;

    const std::size_t select_begin = cur.pos;
    std::size_t select_end = toks.size();
    if (wrapped) {
        int depth = 1;
        std::size_t i = select_begin;
        for (; i < toks.size(); ++i) {
            if (toks[i].kind == SqlToken::Kind::Punct) {
                if (toks[i].ident == "(") ++depth;
                if (toks[i].ident == ")") {
                    --depth;
                    if (depth == 0) break;
                }
            }
        }
        select_end = i;
    }
    JoinScan scan = scan_select_joins(toks, select_begin, select_end);
    if (scan.inner_joins < 1) return std::nullopt;
    const std::size_t text_begin = toks[select_begin].begin;
    const std::size_t text_end =
        (select_end > select_begin ? toks[select_end - 1].end : text.size());
    return CreateTableAsJoinMatch{*table, text.substr(text_begin, text_end - text_begin),
                                  scan.tables, scan.inner_joins};
}

std::optional<TriggerMatch> match_inner_join_select(const std::vector<SqlToken>& toks,
                                                    const std::string& text) {
    if (toks.empty() || toks[0].kind != SqlToken::Kind::Word || !iequals(toks[0].ident, "SELECT"))
        return std::nullopt;
    JoinScan scan = scan_select_joins(toks, 0, toks.size());
    if (scan.inner_joins < 1) return std::nullopt;
    return InnerJoinSelectMatch{text, scan.tables, scan.inner_joins};
}

}  // namespace

std::vector<TriggerMatch> classify_all(const std::string& cmd) {
    std::vector<TriggerMatch> out;
    const std::vector<SqlToken> toks = tokenize_sql(cmd);
    if (toks.empty()) return out;

    auto alters = match_alter_modify(toks, cmd);
    if (!alters.empty()) return alters;

    if (auto m = match_create_index(toks)) {
        out.push_back(std::move(*m));
        return out;
    }
    // CREATE TABLE ... AS SELECT with joins takes precedence over the bare
    // inner-join SELECT pattern so a CTAS never double-fires.
    if (auto m = match_create_table_as_join(toks, cmd)) {
        out.push_back(std::move(*m));
        return out;
    }
    if (auto m = match_inner_join_select(toks, cmd)) {
        out.push_back(std::move(*m));
        return out;
    }
    return out;
}

std::optional<TriggerMatch> classify(const std::string& cmd) {
    auto all = classify_all(cmd);
    if (all.empty()) return std::nullopt;
    return std::move(all.front());
}

namespace {

// Reads a datatype: type word, optional (args), optional UNSIGNED/ZEROFILL.
// Returns the exact source substring.
std::optional<std::string> read_datatype(TokenCursor& cur, const std::string& text) {
    const SqlToken* t = cur.peek();
    if (!t || t->kind != SqlToken::Kind::Word) return std::nullopt;
    const std::size_t begin = t->begin;
    std::size_t end = t->end;
    ++cur.pos;
    if (cur.at_punct('(')) {
        if (!skip_balanced_parens(cur)) return std::nullopt;
        end = cur.toks[cur.pos - 1].end;
    }
    while (cur.at_kw("UNSIGNED") || cur.at_kw("ZEROFILL")) {
        end = cur.peek()->end;
        ++cur.pos;
    }
    return text.substr(begin, end - begin);
}

// Moves the cursor past the current clause: stops after a top-level comma
// or at the closing paren of the enclosing list.
void skip_clause(TokenCursor& cur) {
    int depth = 0;
    while (!cur.done()) {
        if (cur.at_punct('(')) ++depth;
        if (cur.at_punct(')')) {
            if (depth == 0) return;
            --depth;
        }
        if (depth == 0 && cur.at_punct(',')) {
            ++cur.pos;
            return;
        }
        ++cur.pos;
    }
}

bool is_constraint_keyword(const SqlToken& t) {
    static const std::unordered_set<std::string> kws = {
        "PRIMARY", "UNIQUE", "KEY",   "INDEX",   "CONSTRAINT",
        "FOREIGN", "CHECK",  "FULLTEXT", "SPATIAL"};
    return t.kind == SqlToken::Kind::Word && kws.count(to_upper(t.ident)) > 0;
}

}  // namespace

DdlSummary summarize_ddl(const std::string& cmd) {
    DdlSummary out;
    const std::vector<SqlToken> toks = tokenize_sql(cmd);
    TokenCursor cur{toks, 0};

    if (cur.eat_kw("DROP") && cur.eat_kw("TABLE")) {
        if (cur.at_kw("IF")) cur.pos += 2;  // IF EXISTS
        while (true) {
            auto name = read_qualified_name(cur);
            if (!name) break;
            out.dropped_tables.push_back(*name);
            if (!cur.eat_punct(',')) break;
        }
        return out;
    }

    cur.pos = 0;
    if (cur.eat_kw("ALTER") && cur.eat_kw("TABLE")) {
        auto table = read_qualified_name(cur);
        if (!table) return out;
        out.altered_table = *table;
        while (!cur.done()) {
            const std::size_t before = cur.pos;
            if (cur.eat_kw("ADD")) {
                cur.eat_kw("COLUMN");
                const SqlToken* t = cur.peek();
                // ADD INDEX / ADD CONSTRAINT and friends are not columns.
                if (t && t->kind == SqlToken::Kind::Word && !is_constraint_keyword(*t)) {
                    auto column = read_qualified_name(cur);
                    auto datatype = read_datatype(cur, cmd);
                    if (column && datatype)
                        out.added_columns.push_back(ColumnDef{*column, *datatype});
                }
            }
            skip_clause(cur);
            if (cur.pos == before) break;
        }
        return out;
    }

    cur.pos = 0;
    if (!cur.eat_kw("CREATE") || !cur.eat_kw("TABLE")) return out;
    if (cur.at_kw("IF")) cur.pos += 3;  // IF NOT EXISTS
    auto table = read_qualified_name(cur);
    if (!table) return out;

    if (cur.at_kw("AS") ||
        (cur.at_punct('(') && cur.peek(1) && cur.peek(1)->kind == SqlToken::Kind::Word &&
         iequals(cur.peek(1)->ident, "SELECT"))) {
        out.created_table = *table;
        out.create_as_select = true;
        return out;
    }
    if (!cur.eat_punct('(')) return out;
    out.created_table = *table;
    while (!cur.done() && !cur.at_punct(')')) {
        const std::size_t before = cur.pos;
        const SqlToken* t = cur.peek();
        if (t && t->kind == SqlToken::Kind::Word && !is_constraint_keyword(*t)) {
            auto column = read_qualified_name(cur);
            auto datatype = read_datatype(cur, cmd);
            if (column && datatype) out.created_columns.push_back(ColumnDef{*column, *datatype});
        }
        skip_clause(cur);
        if (cur.pos == before) break;
    }
    return out;
}

std::vector<std::string> select_list_columns(const std::string& select_stmt) {
    std::vector<std::string> out;
    const std::vector<SqlToken> toks = tokenize_sql(select_stmt);
    std::size_t i = 0;
    while (i < toks.size() &&
           !(toks[i].kind == SqlToken::Kind::Word && iequals(toks[i].ident, "SELECT")))
        ++i;
    if (i == toks.size()) return out;
    ++i;
    if (i < toks.size() && toks[i].kind == SqlToken::Kind::Word &&
        (iequals(toks[i].ident, "DISTINCT") || iequals(toks[i].ident, "ALL")))
        ++i;

    // Segment the list on top-level commas, up to the top-level FROM.
    int depth = 0;
    std::vector<std::vector<const SqlToken*>> segments(1);
    for (; i < toks.size(); ++i) {
        const SqlToken& t = toks[i];
        if (t.kind == SqlToken::Kind::Punct && t.ident == "(") ++depth;
        if (t.kind == SqlToken::Kind::Punct && t.ident == ")") --depth;
        if (depth == 0 && t.kind == SqlToken::Kind::Word && iequals(t.ident, "FROM")) break;
        if (depth == 0 && t.kind == SqlToken::Kind::Punct && t.ident == ",") {
            segments.emplace_back();
            continue;
        }
        segments.back().push_back(&t);
    }
    for (const auto& seg : segments) {
        if (seg.empty()) continue;
        const SqlToken* last = seg.back();
        if (last->kind != SqlToken::Kind::Word) continue;
        if (iequals(last->ident, "AS")) continue;
        out.push_back(last->ident);
    }
    return out;
}

InterventionType intervention_type(const TriggerMatch& match) {
    struct Visitor {
        InterventionType operator()(const DatatypeComparisonMatch&) const {
            return InterventionType::DATATYPE_COMPARISON;
        }
        InterventionType operator()(const SingleColumnIndexMatch&) const {
            return InterventionType::COMPOSITE_VS_MULTI_SINGLE;
        }
        InterventionType operator()(const CompositeIndexMatch&) const {
            return InterventionType::COMPOSITE_IND_COL_ORDER;
        }
        InterventionType operator()(const InnerJoinSelectMatch&) const {
            return InterventionType::DENORMALIZATION_WHEN;
        }
        InterventionType operator()(const CreateTableAsJoinMatch&) const {
            return InterventionType::TABLE_CHOICE_DENORMALIZATION;
        }
    };
    return std::visit(Visitor{}, match);
}

const std::string& to_string(InterventionType type) {
    static const std::string names[] = {
        "DATATYPE_COMPARISON", "COMPOSITE_VS_MULTI_SINGLE", "COMPOSITE_IND_COL_ORDER",
        "DENORMALIZATION_WHEN", "TABLE_CHOICE_DENORMALIZATION"};
    return names[static_cast<int>(type)];
}

std::optional<InterventionType> intervention_type_from_string(const std::string& name) {
    for (int i = 0; i < kInterventionTypeCount; ++i) {
        InterventionType t = static_cast<InterventionType>(i);
        if (to_string(t) == name) return t;
    }
    return std::nullopt;
}

const std::string& to_string(ReflectionOrigin origin) {
    static const std::string names[] = {"dynamic", "static_fallback"};
    return names[static_cast<int>(origin)];
}

}  // namespace reflectsql
