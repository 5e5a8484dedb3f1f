#include "reflectsql/llm_gateway.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <random>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "reflectsql/sql_matcher.hpp"

namespace reflectsql {

namespace {

// Text between `after` (and its following newline) and the next `before`.
std::string slice_between(const std::string& text, const std::string& after,
                          const std::string& before) {
    const std::size_t start = text.find(after);
    if (start == std::string::npos) return "";
    std::size_t begin = start + after.size();
    if (begin < text.size() && text[begin] == '\n') ++begin;
    std::size_t end = before.empty() ? text.size() : text.find(before, begin);
    if (end == std::string::npos) end = text.size();
    return std::string(text.substr(begin, end - begin));
}

std::string line_after(const std::string& text, const std::string& marker) {
    const std::size_t start = text.find(marker);
    if (start == std::string::npos) return "";
    std::size_t begin = text.find('\n', start);
    if (begin == std::string::npos) return "";
    ++begin;
    std::size_t end = text.find('\n', begin);
    if (end == std::string::npos) end = text.size();
    return std::string(text.substr(begin, end - begin));
}

bool iequal(const std::string& a, const std::string& b) {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) ==
                      std::tolower(static_cast<unsigned char>(y));
           });
}

// Column names the creation command exposes: select list for CTAS forms,
// declared columns otherwise.
std::vector<std::string> creation_columns(const std::string& creation) {
    if (creation.empty()) return {};
    std::vector<std::string> cols = select_list_columns(creation);
    if (!cols.empty()) return cols;
    for (const ColumnDef& def : summarize_ddl(creation).created_columns)
        cols.push_back(def.name);
    return cols;
}

std::string join_columns(const std::vector<std::string>& cols) {
    std::string out;
    for (const auto& c : cols) {
        if (!out.empty()) out += ", ";
        out += c;
    }
    return out;
}

// idx_1 -> {idx_2, idx_3, idx_4}; names without a numeric tail are reused
// as-is (both appear in observed generations).
std::vector<std::string> alternative_index_names(const std::string& name, int count) {
    std::size_t digits = name.size();
    while (digits > 0 && std::isdigit(static_cast<unsigned char>(name[digits - 1]))) --digits;
    std::vector<std::string> out;
    if (digits < name.size()) {
        const std::string prefix = name.substr(0, digits);
        const long base = std::stol(name.substr(digits));
        for (int i = 1; i <= count; ++i) out.push_back(prefix + std::to_string(base + i));
    } else {
        for (int i = 0; i < count; ++i) out.push_back(name);
    }
    return out;
}

std::string mock_composite_order(const std::string& prompt) {
    const std::string trigger =
        line_after(prompt, "Now look at this command to create a composite index:");
    auto match = classify(normalize(trigger));
    if (!match || !std::holds_alternative<CompositeIndexMatch>(*match))
        throw BackendError("composite-order prompt carries no composite index command");
    const auto idx = std::get<CompositeIndexMatch>(*match);

    const std::string creation =
        slice_between(prompt, "Look at the following SQL table creation command:",
                      "\nNow look at");
    std::string extra = "id";
    for (const std::string& col : creation_columns(creation)) {
        const bool used = std::any_of(idx.columns.begin(), idx.columns.end(),
                                      [&](const std::string& c) { return iequal(c, col); });
        if (!used) {
            extra = col;
            break;
        }
    }

    std::vector<std::string> swapped = idx.columns;
    std::swap(swapped[0], swapped[1]);
    const std::vector<std::vector<std::string>> variants = {
        swapped,
        {extra, idx.columns[0]},
        {idx.columns[0], extra},
    };
    const std::vector<std::string> names = alternative_index_names(idx.index, 3);

    std::string out;
    for (std::size_t i = 0; i < variants.size(); ++i) {
        if (i) out += "\n";
        out += "CREATE INDEX " + names[i] + " ON " + idx.table + " (" +
               join_columns(variants[i]) + ");";
    }
    return out;
}

std::string mock_vs_single(const std::string& prompt) {
    const std::string trigger =
        line_after(prompt, "Now look at this command to create a single column index:");
    auto match = classify(normalize(trigger));
    if (!match || !std::holds_alternative<SingleColumnIndexMatch>(*match))
        throw BackendError("single-index prompt carries no single column index command");
    const auto idx = std::get<SingleColumnIndexMatch>(*match);

    const std::string creation =
        slice_between(prompt, "Look at the following SQL table creation command:",
                      "\nNow look at");
    std::string other = idx.column + "_2";
    for (const std::string& col : creation_columns(creation)) {
        if (!iequal(col, idx.column)) {
            other = col;
            break;
        }
    }
    std::string out = "CREATE INDEX " + idx.column + "_" + other + "_index ON " + idx.table +
                      " (" + idx.column + ", " + other + ");";
    out += "\nCREATE INDEX " + other + "_index ON " + idx.table + " (" + other + ");";
    return out;
}

std::string sanitize_identifier(const std::string& raw) {
    std::string out;
    for (char c : raw) {
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') out += c;
    }
    return out;
}

std::string mock_denormalization(const std::string& prompt) {
    const std::size_t last = prompt.rfind("SQL Query: ");
    if (last == std::string::npos) throw BackendError("denormalization prompt without query");
    std::size_t begin = last + std::string("SQL Query: ").size();
    std::size_t end = prompt.find("\nHelpful Denormalization:", begin);
    if (end == std::string::npos) end = prompt.size();
    const std::string query = normalize(prompt.substr(begin, end - begin));

    std::string name = "denorm_result";
    if (auto match = classify(query)) {
        if (const auto* join = std::get_if<InnerJoinSelectMatch>(&*match)) {
            std::string joined;
            for (const std::string& t : join->tables) {
                const std::string part = sanitize_identifier(t);
                if (part.empty()) continue;
                joined += "_" + part;
            }
            if (!joined.empty()) name = "denorm" + joined;
        }
    }
    return "CREATE TABLE " + name + " AS (" + query + ");";
}

std::string mock_table_choice(const std::string& prompt) {
    const std::size_t last = prompt.rfind("COMMAND: ");
    if (last == std::string::npos) throw BackendError("table-choice prompt without command");
    std::size_t begin = last + std::string("COMMAND: ").size();
    std::size_t end = prompt.find("\nALTERNATIVE:", begin);
    if (end == std::string::npos) end = prompt.size();
    const std::string cmd = normalize(prompt.substr(begin, end - begin));

    auto match = classify(cmd);
    if (!match || !std::holds_alternative<CreateTableAsJoinMatch>(*match))
        throw BackendError("table-choice prompt carries no joined CTAS");
    const auto ctas = std::get<CreateTableAsJoinMatch>(*match);

    // Cut the last top-level join clause out of the select body.
    const std::vector<SqlToken> toks = tokenize_sql(ctas.query_text);
    std::size_t join_begin = std::string::npos;
    int depth = 0;
    for (std::size_t i = 0; i < toks.size(); ++i) {
        const SqlToken& t = toks[i];
        if (t.kind == SqlToken::Kind::Punct && t.ident == "(") ++depth;
        if (t.kind == SqlToken::Kind::Punct && t.ident == ")") --depth;
        if (depth != 0 || t.kind != SqlToken::Kind::Word) continue;
        std::string kw = t.ident;
        std::transform(kw.begin(), kw.end(), kw.begin(),
                       [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
        if (kw == "JOIN" && (join_begin == std::string::npos || toks[i].begin > join_begin)) {
            // Back up over the qualifier words directly before JOIN.
            std::size_t b = i;
            while (b > 0 && toks[b - 1].kind == SqlToken::Kind::Word) {
                std::string prev = toks[b - 1].ident;
                std::transform(prev.begin(), prev.end(), prev.begin(), [](unsigned char c) {
                    return static_cast<char>(std::toupper(c));
                });
                if (prev == "INNER" || prev == "LEFT" || prev == "RIGHT" || prev == "FULL" ||
                    prev == "CROSS" || prev == "OUTER") {
                    --b;
                    continue;
                }
                break;
            }
            join_begin = toks[b].begin;
        }
    }
    if (join_begin == std::string::npos)
        throw BackendError("table-choice prompt carries no join to remove");

    // The clause runs until the next top-level clause keyword or the end.
    std::size_t cut_end = ctas.query_text.size();
    depth = 0;
    for (const SqlToken& t : toks) {
        if (t.begin <= join_begin) {
            if (t.kind == SqlToken::Kind::Punct && t.ident == "(") ++depth;
            if (t.kind == SqlToken::Kind::Punct && t.ident == ")") --depth;
            continue;
        }
        if (t.kind == SqlToken::Kind::Punct && t.ident == "(") ++depth;
        if (t.kind == SqlToken::Kind::Punct && t.ident == ")") --depth;
        if (depth != 0 || t.kind != SqlToken::Kind::Word) continue;
        std::string kw = t.ident;
        std::transform(kw.begin(), kw.end(), kw.begin(),
                       [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
        if (kw == "WHERE" || kw == "GROUP" || kw == "ORDER" || kw == "HAVING" ||
            kw == "LIMIT" || kw == "UNION") {
            cut_end = t.begin;
            break;
        }
    }
    std::string modified = ctas.query_text;
    modified.erase(join_begin, cut_end - join_begin);

    const std::size_t at = cmd.find(ctas.query_text);
    std::string alt = cmd;
    if (at != std::string::npos) alt.replace(at, ctas.query_text.size(), modified);
    return normalize(alt);
}

}  // namespace

std::string mock_generate(const std::string& prompt) {
    if (prompt.find("create a composite index") != std::string::npos)
        return mock_composite_order(prompt);
    if (prompt.find("create a single column index") != std::string::npos)
        return mock_vs_single(prompt);
    if (prompt.find("Helpful Denormalization:") != std::string::npos)
        return mock_denormalization(prompt);
    if (prompt.find("ALTERNATIVE:") != std::string::npos) return mock_table_choice(prompt);
    throw BackendError("unrecognized prompt shape");
}

CompletionResult MockBackend::complete(const CompletionRequest& req) {
    return {mock_generate(req.prompt), "mock", 0.0};
}

HttpBackend::HttpBackend(std::string base_url, std::string api_key, int max_in_flight)
    : base_url_(std::move(base_url)),
      api_key_(std::move(api_key)),
      in_flight_(std::max(1, std::min(max_in_flight, 64))) {
    if (api_key_.empty())
        throw ConfigError("completion backend needs a credential (set LLM_API_KEY)");
    if (base_url_.empty()) throw ConfigError("completion backend needs a base URL");
    while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
}

std::string HttpBackend::request_body(const CompletionRequest& req) {
    nlohmann::json body;
    body["model"] = req.model;
    body["prompt"] = req.prompt;
    body["temperature"] = req.temperature;
    body["max_tokens"] = req.max_tokens;
    return body.dump();
}

CompletionResult HttpBackend::complete(const CompletionRequest& req) {
    // scheme://host[:port][/prefix] -> client target + path prefix
    const std::size_t scheme = base_url_.find("://");
    if (scheme == std::string::npos) throw ConfigError("base URL must include a scheme");
    const std::size_t path_start = base_url_.find('/', scheme + 3);
    const std::string host =
        path_start == std::string::npos ? base_url_ : base_url_.substr(0, path_start);
    const std::string prefix =
        path_start == std::string::npos ? "" : base_url_.substr(path_start);

    in_flight_.acquire();
    struct Release {
        std::counting_semaphore<64>& sem;
        ~Release() { sem.release(); }
    } release{in_flight_};

    httplib::Client client(host);
    client.set_connection_timeout(std::chrono::duration<double>(req.timeout_s));
    client.set_read_timeout(std::chrono::duration<double>(req.timeout_s));
    httplib::Headers headers = {{"Authorization", "Bearer " + api_key_}};

    static thread_local std::mt19937 jitter_rng{std::random_device{}()};
    const auto started = std::chrono::steady_clock::now();
    std::string last_error;
    for (int attempt = 0; attempt <= req.retries; ++attempt) {
        if (attempt > 0) {
            const double base = 0.5 * static_cast<double>(1 << (attempt - 1));
            const double factor = 0.8 + 0.4 * (static_cast<double>(jitter_rng() % 1000) / 999.0);
            std::this_thread::sleep_for(std::chrono::duration<double>(base * factor));
        }
        httplib::Result res =
            client.Post(prefix + "/completions", headers, request_body(req), "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;  // transient, retry
        }
        if (res->status >= 500 || res->status == 429) {
            last_error = "server returned status " + std::to_string(res->status);
            continue;
        }
        if (res->status < 200 || res->status >= 300)
            throw BackendError("completion request failed with status " +
                               std::to_string(res->status));
        try {
            const nlohmann::json body = nlohmann::json::parse(res->body);
            const auto& choices = body.at("choices");
            if (!choices.is_array() || choices.empty())
                throw BackendError("completion response has no choices");
            const double latency =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
                    .count();
            return {choices.at(0).at("text").get<std::string>(), "live", latency};
        } catch (const BackendError&) {
            throw;
        } catch (const std::exception& e) {
            throw BackendError(std::string("malformed completion response: ") + e.what());
        }
    }
    throw BackendError("completion request exhausted retries: " + last_error);
}

}  // namespace reflectsql
