#include "reflectsql/validator.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <unordered_set>

#include "reflectsql/sql_matcher.hpp"

namespace reflectsql {

namespace {

std::string upper(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return s;
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

bool is_starter(const std::string& word) {
    const std::string w = upper(word);
    return w == "CREATE" || w == "SELECT" || w == "ALTER";
}

bool is_continuation(const std::string& word) {
    static const std::unordered_set<std::string> kws = {
        "FROM", "WHERE", "ON",    "INNER", "LEFT",  "RIGHT", "FULL",  "CROSS", "OUTER",
        "JOIN", "GROUP", "ORDER", "HAVING", "LIMIT", "AND",   "OR",    "AS",   "UNION",
        "VALUES", "SET"};
    return kws.count(upper(word)) > 0;
}

std::string first_word(const std::string& line) {
    std::size_t b = 0;
    while (b < line.size() && !std::isalpha(static_cast<unsigned char>(line[b]))) {
        // A word reached through anything but whitespace is not a leading word.
        if (!std::isspace(static_cast<unsigned char>(line[b]))) return "";
        ++b;
    }
    std::size_t e = b;
    while (e < line.size() && (std::isalnum(static_cast<unsigned char>(line[e])) ||
                               line[e] == '_'))
        ++e;
    return line.substr(b, e - b);
}

// Offset of the first standalone CREATE/SELECT/ALTER in the line, npos when
// none.
std::size_t find_starter(const std::string& line) {
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (!std::isalpha(static_cast<unsigned char>(line[i]))) continue;
        if (i > 0 && (std::isalnum(static_cast<unsigned char>(line[i - 1])) ||
                      line[i - 1] == '_'))
            continue;
        std::size_t e = i;
        while (e < line.size() && (std::isalnum(static_cast<unsigned char>(line[e])) ||
                                   line[e] == '_'))
            ++e;
        if (is_starter(line.substr(i, e - i))) return i;
        i = e;
    }
    return std::string::npos;
}

// Removes ``` markers (with an attached language tag) from a line.
std::string strip_fences(std::string line) {
    std::size_t pos;
    while ((pos = line.find("```")) != std::string::npos) {
        std::size_t end = pos + 3;
        while (end < line.size() && std::isalpha(static_cast<unsigned char>(line[end]))) ++end;
        line.erase(pos, end - pos);
    }
    return line;
}

std::string strip_numbering(const std::string& line) {
    std::size_t i = 0;
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i && j < line.size() && (line[j] == '.' || line[j] == ')')) {
        ++j;
        while (j < line.size() && std::isspace(static_cast<unsigned char>(line[j]))) ++j;
        return line.substr(j);
    }
    if (i < line.size() && (line[i] == '-' || line[i] == '*') && i + 1 < line.size() &&
        std::isspace(static_cast<unsigned char>(line[i + 1])))
        return line.substr(i + 2);
    return line.substr(i);
}

int paren_balance(const std::string& text) {
    int balance = 0;
    for (const SqlToken& t : tokenize_sql(text)) {
        if (t.kind != SqlToken::Kind::Punct) continue;
        if (t.ident == "(") ++balance;
        if (t.ident == ")") --balance;
    }
    return balance;
}

}  // namespace

std::vector<std::string> extract_statements(const std::string& raw) {
    std::vector<std::string> chunks;
    std::string buffer;
    auto flush = [&] {
        if (!buffer.empty()) chunks.push_back(buffer);
        buffer.clear();
    };

    std::istringstream in(raw);
    std::string line;
    while (std::getline(in, line)) {
        line = trim(strip_numbering(strip_fences(line)));
        const bool open = !buffer.empty() && paren_balance(buffer) > 0;
        if (line.empty()) {
            if (!open) flush();
            continue;
        }
        if (open) {
            buffer += " " + line;
            continue;
        }
        if (is_starter(first_word(line))) {
            flush();
            buffer = line;
            continue;
        }
        if (!buffer.empty() && is_continuation(first_word(line))) {
            buffer += " " + line;
            continue;
        }
        const std::size_t pos = find_starter(line);
        flush();
        if (pos != std::string::npos) buffer = line.substr(pos);
    }
    flush();

    std::vector<std::string> out;
    for (const std::string& chunk : chunks) {
        for (std::string& stmt : split_statements(chunk)) {
            if (is_starter(first_word(stmt))) out.push_back(std::move(stmt));
        }
    }
    return out;
}

namespace {

struct Checker {
    const std::vector<SqlToken>& toks;
    std::size_t pos = 0;
    std::string reason;

    bool fail(const std::string& why) {
        if (reason.empty()) reason = why;
        return false;
    }
    const SqlToken* peek(std::size_t ahead = 0) const {
        return pos + ahead < toks.size() ? &toks[pos + ahead] : nullptr;
    }
    bool at_word(const char* kw) const {
        const SqlToken* t = peek();
        return t && t->kind == SqlToken::Kind::Word && upper(t->ident) == kw;
    }
    bool eat_word(const char* kw) {
        if (!at_word(kw)) return false;
        ++pos;
        return true;
    }
    bool at_punct(char c) const {
        const SqlToken* t = peek();
        return t && t->kind == SqlToken::Kind::Punct && t->ident.size() == 1 && t->ident[0] == c;
    }
    bool eat_punct(char c) {
        if (!at_punct(c)) return false;
        ++pos;
        return true;
    }
    bool eat_name() {
        const SqlToken* t = peek();
        if (!t || t->kind != SqlToken::Kind::Word || t->ident.empty()) return false;
        ++pos;
        while (at_punct('.')) {
            const SqlToken* next = peek(1);
            if (!next || next->kind != SqlToken::Kind::Word) return false;
            pos += 2;
        }
        return true;
    }

    bool check_index() {
        if (at_word("UNIQUE") || at_word("FULLTEXT") || at_word("SPATIAL")) ++pos;
        if (!eat_word("INDEX")) return fail("expected INDEX");
        if (!eat_name()) return fail("missing index name");
        if (!eat_word("ON")) return fail("missing ON");
        if (!eat_name()) return fail("missing table name");
        if (!eat_punct('(')) return fail("missing column list");
        std::vector<std::string> cols;
        while (true) {
            const SqlToken* t = peek();
            if (!t || t->kind != SqlToken::Kind::Word || t->ident.empty())
                return fail("empty column list");
            cols.push_back(lower(t->ident));
            ++pos;
            if (at_punct('(')) {  // prefix length
                ++pos;
                if (!peek() || peek()->kind != SqlToken::Kind::Number)
                    return fail("bad prefix length");
                ++pos;
                if (!eat_punct(')')) return fail("bad prefix length");
            }
            if (at_word("ASC") || at_word("DESC")) ++pos;
            if (eat_punct(',')) continue;
            if (eat_punct(')')) break;
            return fail("malformed column list");
        }
        std::sort(cols.begin(), cols.end());
        if (std::adjacent_find(cols.begin(), cols.end()) != cols.end())
            return fail("duplicate column");
        if (pos != toks.size()) return fail("trailing tokens after index definition");
        return true;
    }

    // Validates a select body in [pos, end). Joins must name a table and,
    // except CROSS, carry a non-empty ON condition.
    bool check_select(std::size_t end) {
        if (!eat_word("SELECT")) return fail("expected SELECT");
        const std::size_t list_begin = pos;
        int depth = 0;
        std::size_t from_pos = end;
        for (std::size_t i = pos; i < end; ++i) {
            const SqlToken& t = toks[i];
            if (t.kind == SqlToken::Kind::Punct && t.ident == "(") ++depth;
            if (t.kind == SqlToken::Kind::Punct && t.ident == ")") --depth;
            if (depth == 0 && t.kind == SqlToken::Kind::Word && upper(t.ident) == "FROM") {
                from_pos = i;
                break;
            }
        }
        if (from_pos == end) return fail("SELECT without FROM");
        if (from_pos == list_begin) return fail("empty select list");

        pos = from_pos + 1;
        if (!eat_operand(end)) return fail("FROM without table");
        while (pos < end && at_punct(',')) {
            ++pos;
            if (!eat_operand(end)) return fail("dangling comma in FROM");
        }
        depth = 0;
        while (pos < end) {
            const SqlToken& t = toks[pos];
            if (t.kind == SqlToken::Kind::Punct && t.ident == "(") {
                ++depth;
                ++pos;
                continue;
            }
            if (t.kind == SqlToken::Kind::Punct && t.ident == ")") {
                --depth;
                ++pos;
                continue;
            }
            if (depth != 0 || t.kind != SqlToken::Kind::Word) {
                ++pos;
                continue;
            }
            const std::string kw = upper(t.ident);
            bool cross = false;
            bool is_join = false;
            if (kw == "JOIN") {
                is_join = true;
                ++pos;
            } else if (kw == "INNER" || kw == "LEFT" || kw == "RIGHT" || kw == "FULL" ||
                       kw == "CROSS") {
                cross = kw == "CROSS";
                ++pos;
                eat_word("OUTER");
                if (!eat_word("JOIN")) return fail(kw + " without JOIN");
                is_join = true;
            } else {
                ++pos;
                continue;
            }
            if (is_join) {
                if (!eat_operand(end)) return fail("join missing table");
                if (cross) continue;
                if (!eat_word("ON")) return fail("join missing ON");
                // The condition must hold at least one token.
                if (pos >= end) return fail("empty join condition");
                const SqlToken& c = toks[pos];
                if (c.kind == SqlToken::Kind::Word) {
                    const std::string ckw = upper(c.ident);
                    if (ckw == "WHERE" || ckw == "GROUP" || ckw == "ORDER" || ckw == "JOIN" ||
                        ckw == "INNER" || ckw == "LEFT" || ckw == "RIGHT")
                        return fail("empty join condition");
                }
            }
        }
        return true;
    }

    // Table name (+ alias) or parenthesized subquery (+ alias).
    bool eat_operand(std::size_t end) {
        if (pos >= end) return false;
        if (at_punct('(')) {
            int depth = 0;
            while (pos < end) {
                if (at_punct('(')) ++depth;
                if (at_punct(')')) {
                    --depth;
                    ++pos;
                    if (depth == 0) break;
                    continue;
                }
                ++pos;
            }
            if (depth != 0) return false;
        } else {
            if (!eat_name()) return false;
        }
        if (eat_word("AS")) {
            if (!eat_name()) return false;
            return true;
        }
        const SqlToken* t = peek();
        if (t && t->kind == SqlToken::Kind::Word && pos < end) {
            const std::string kw = upper(t->ident);
            static const std::unordered_set<std::string> stop = {
                "ON",    "WHERE", "GROUP", "ORDER", "HAVING", "LIMIT", "INNER", "LEFT",
                "RIGHT", "FULL",  "CROSS", "JOIN",  "UNION",  "AND",   "OR"};
            if (!stop.count(kw)) ++pos;  // alias
        }
        return true;
    }

    bool check_create_table() {
        if (!eat_name()) return fail("missing table name");
        if (eat_word("AS")) {
            const bool wrapped = eat_punct('(');
            const std::size_t end = wrapped ? toks.size() - 1 : toks.size();
            if (wrapped &&
                !(toks.back().kind == SqlToken::Kind::Punct && toks.back().ident == ")"))
                return fail("unterminated SELECT wrapper");
            if (!check_select(end)) return false;
            if (pos != end) return fail("trailing tokens after SELECT");
            return true;
        }
        if (at_punct('(') && peek(1) && peek(1)->kind == SqlToken::Kind::Word &&
            upper(peek(1)->ident) == "SELECT") {
            ++pos;
            if (!(toks.back().kind == SqlToken::Kind::Punct && toks.back().ident == ")"))
                return fail("unterminated SELECT wrapper");
            if (!check_select(toks.size() - 1)) return false;
            if (pos != toks.size() - 1) return fail("trailing tokens after SELECT");
            return true;
        }
        if (eat_punct('(')) {
            if (at_punct(')')) return fail("empty column list");
            return true;  // column-definition DDL, structure checked by balance
        }
        return fail("malformed CREATE TABLE");
    }

    bool check() {
        if (toks.empty()) return fail("empty statement");
        for (const SqlToken& t : toks) {
            if (t.kind == SqlToken::Kind::Word && t.ident.empty())
                return fail("empty identifier");
        }
        int balance = 0;
        for (const SqlToken& t : toks) {
            if (t.kind != SqlToken::Kind::Punct) continue;
            if (t.ident == "(") ++balance;
            if (t.ident == ")") --balance;
            if (balance < 0) return fail("unbalanced parentheses");
        }
        if (balance != 0) return fail("unbalanced parentheses");

        if (eat_word("CREATE")) {
            if (at_word("TABLE")) {
                ++pos;
                return check_create_table();
            }
            return check_index();
        }
        if (at_word("SELECT")) return check_select(toks.size());
        if (eat_word("ALTER")) {
            if (!eat_word("TABLE")) return fail("expected TABLE");
            if (!eat_name()) return fail("missing table name");
            return true;
        }
        return fail("unrecognized statement");
    }
};

}  // namespace

SyntaxCheck check_syntax(const std::string& sql) {
    const std::vector<SqlToken> toks = tokenize_sql(sql);
    Checker checker{toks};
    if (checker.check()) return {true, ""};
    return {false, checker.reason.empty() ? "invalid" : checker.reason};
}

namespace {

// Fix 2: complete ON-less joins when the registry knows a column the two
// tables share. Aliases are used for qualification when present.
std::string repair_joins(const std::string& sql, const SessionState* state) {
    if (!state) return sql;
    const std::vector<SqlToken> toks = tokenize_sql(sql);
    struct Insertion {
        std::size_t offset;
        std::string text;
    };
    std::vector<Insertion> insertions;

    std::string prev_table, prev_qual;
    std::size_t i = 0;
    auto read_name = [&](std::size_t& at) -> std::string {
        std::string name = toks[at].ident;
        ++at;
        while (at + 1 < toks.size() && toks[at].kind == SqlToken::Kind::Punct &&
               toks[at].ident == "." && toks[at + 1].kind == SqlToken::Kind::Word) {
            name = toks[at + 1].ident;  // qualified: keep the last component
            at += 2;
        }
        return name;
    };
    static const std::unordered_set<std::string> stop = {
        "ON",    "WHERE", "GROUP", "ORDER", "HAVING", "LIMIT", "INNER", "LEFT",
        "RIGHT", "FULL",  "CROSS", "JOIN",  "UNION",  "AND",   "OR",    "AS"};
    while (i < toks.size()) {
        const SqlToken& t = toks[i];
        if (t.kind != SqlToken::Kind::Word) {
            ++i;
            continue;
        }
        const std::string kw = upper(t.ident);
        bool cross = false;
        bool is_join = false;
        std::size_t j = i;
        if (kw == "FROM") {
            ++j;
            if (j < toks.size() && toks[j].kind == SqlToken::Kind::Word) {
                prev_table = read_name(j);
                prev_qual = prev_table;
                if (j < toks.size() && toks[j].kind == SqlToken::Kind::Word &&
                    !stop.count(upper(toks[j].ident))) {
                    prev_qual = toks[j].ident;
                    ++j;
                }
            }
            i = j;
            continue;
        }
        if (kw == "JOIN") {
            is_join = true;
            ++j;
        } else if (kw == "INNER" || kw == "LEFT" || kw == "RIGHT" || kw == "FULL" ||
                   kw == "CROSS") {
            cross = kw == "CROSS";
            ++j;
            if (j < toks.size() && upper(toks[j].ident) == "OUTER") ++j;
            if (j < toks.size() && upper(toks[j].ident) == "JOIN") {
                is_join = true;
                ++j;
            }
        }
        if (!is_join) {
            ++i;
            continue;
        }
        if (j >= toks.size() || toks[j].kind != SqlToken::Kind::Word) {
            i = j;
            continue;
        }
        const std::string table = read_name(j);
        std::string qual = table;
        if (j < toks.size() && toks[j].kind == SqlToken::Kind::Word) {
            const std::string next = upper(toks[j].ident);
            if (next == "AS" && j + 1 < toks.size() &&
                toks[j + 1].kind == SqlToken::Kind::Word) {
                qual = toks[j + 1].ident;
                j += 2;
            } else if (!stop.count(next)) {
                qual = toks[j].ident;
                ++j;
            }
        }
        const bool has_on = j < toks.size() && toks[j].kind == SqlToken::Kind::Word &&
                            upper(toks[j].ident) == "ON";
        if (!has_on && !cross && !prev_table.empty()) {
            const TableInfo* a = state->find_table(prev_table);
            const TableInfo* b = state->find_table(table);
            if (a && b) {
                std::string shared;
                for (const ColumnDef& col : a->columns) {
                    if (b->find_column(col.name)) {
                        shared = col.name;
                        break;
                    }
                }
                if (!shared.empty()) {
                    const std::size_t at =
                        j > 0 && j <= toks.size() ? toks[j - 1].end : sql.size();
                    insertions.push_back(
                        {at, " ON " + prev_qual + "." + shared + "=" + qual + "." + shared});
                }
            }
        }
        prev_table = table;
        prev_qual = qual;
        i = j;
    }

    std::string out = sql;
    for (auto it = insertions.rbegin(); it != insertions.rend(); ++it)
        out.insert(it->offset, it->text);
    return out;
}

// Fix 3: drop commas that sit directly before a closing paren or at the
// statement end.
std::string strip_trailing_commas(const std::string& sql) {
    const std::vector<SqlToken> toks = tokenize_sql(sql);
    std::vector<std::size_t> removals;
    for (std::size_t i = 0; i < toks.size(); ++i) {
        if (toks[i].kind != SqlToken::Kind::Punct || toks[i].ident != ",") continue;
        const bool before_close = i + 1 < toks.size() &&
                                  toks[i + 1].kind == SqlToken::Kind::Punct &&
                                  toks[i + 1].ident == ")";
        const bool at_end = i + 1 == toks.size();
        if (before_close || at_end) removals.push_back(toks[i].begin);
    }
    std::string out = sql;
    for (auto it = removals.rbegin(); it != removals.rend(); ++it) out.erase(*it, 1);
    return out;
}

// Fix 4: markdown leftovers. Fence markers vanish; an odd backtick count
// means they cannot be identifier quotes, so they all go; a whole-statement
// `...` wrap is peeled.
std::string strip_stray_backticks(std::string sql) {
    std::size_t pos;
    while ((pos = sql.find("```")) != std::string::npos) {
        std::size_t end = pos + 3;
        while (end < sql.size() && std::isalpha(static_cast<unsigned char>(sql[end]))) ++end;
        sql.erase(pos, end - pos);
    }
    const auto count = std::count(sql.begin(), sql.end(), '`');
    if (count % 2 != 0) {
        sql.erase(std::remove(sql.begin(), sql.end(), '`'), sql.end());
        return sql;
    }
    const std::string trimmed = trim(sql);
    if (trimmed.size() > 2 && trimmed.front() == '`' && trimmed.back() == '`' &&
        trimmed.find(' ') != std::string::npos) {
        return trimmed.substr(1, trimmed.size() - 2);
    }
    return sql;
}

}  // namespace

std::string apply_fixes(const std::string& sql, const SessionState* state) {
    std::string out = sql;
    const int balance = paren_balance(out);
    if (balance == 1) out += ")";
    out = repair_joins(out, state);
    out = strip_trailing_commas(out);
    out = strip_stray_backticks(out);
    return normalize(out);
}

ValidationOutcome validate_alternatives(const std::string& raw, const LlmPrompt& prompt,
                                        const SessionState* state) {
    ValidationOutcome out;
    for (const std::string& stmt : extract_statements(raw)) {
        AlternativeOutcome alt;
        alt.original = stmt;
        const SyntaxCheck first = check_syntax(stmt);
        if (first.pass) {
            alt.status = AltStatus::Valid;
            alt.fixed = stmt;
        } else {
            const std::string fixed = apply_fixes(stmt, state);
            const SyntaxCheck second = check_syntax(fixed);
            if (second.pass) {
                alt.status = AltStatus::Repaired;
                alt.fixed = fixed;
            } else {
                alt.status = AltStatus::Invalid;
                alt.reason = second.reason;
            }
        }
        out.alternatives.push_back(std::move(alt));
    }

    const int required = std::max(1, prompt.expected_alternatives);
    for (const AlternativeOutcome& alt : out.alternatives) {
        if (alt.status == AltStatus::Invalid) continue;
        if (static_cast<int>(out.accepted.size()) < required) out.accepted.push_back(alt.fixed);
    }
    out.accept = static_cast<int>(out.accepted.size()) >= required;
    if (!out.accept) out.accepted.clear();
    return out;
}

}  // namespace reflectsql
