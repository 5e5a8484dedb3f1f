#include "reflectsql/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace reflectsql {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string unquote(const std::string& s) {
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                          (s.front() == '\'' && s.back() == '\'')))
        return s.substr(1, s.size() - 2);
    return s;
}

[[noreturn]] void bad_value(int line, const std::string& key, const std::string& what) {
    throw ConfigError("config line " + std::to_string(line) + ": " + key + " " + what);
}

double parse_number(int line, const std::string& key, const std::string& value) {
    std::size_t used = 0;
    double parsed = 0.0;
    try {
        parsed = std::stod(value, &used);
    } catch (const std::exception&) {
        bad_value(line, key, "expects a number, got \"" + value + "\"");
    }
    if (used != value.size()) bad_value(line, key, "expects a number, got \"" + value + "\"");
    return parsed;
}

int parse_int(int line, const std::string& key, const std::string& value) {
    const double parsed = parse_number(line, key, value);
    const int as_int = static_cast<int>(parsed);
    if (static_cast<double>(as_int) != parsed)
        bad_value(line, key, "expects an integer, got \"" + value + "\"");
    return as_int;
}

void apply(EngineConfig& cfg, const std::string& key, const std::string& value, int line) {
    if (key == "scheduler.tau_s") {
        const double tau = parse_number(line, key, value);
        if (tau < 0) bad_value(line, key, "must not be negative");
        cfg.scheduler.tau_s = tau;
    } else if (key == "scheduler.drain") {
        if (value == "event") cfg.scheduler.drain = DrainMode::EventDriven;
        else if (value == "timer") cfg.scheduler.drain = DrainMode::Timer;
        else bad_value(line, key, "must be event or timer, got \"" + value + "\"");
    } else if (key == "scheduler.timer_interval_s") {
        const double interval = parse_number(line, key, value);
        if (interval <= 0) bad_value(line, key, "must be positive");
        cfg.scheduler.timer_interval_s = interval;
    } else if (key == "scheduler.clock") {
        if (value == "last_shown") cfg.scheduler.clock = SpacingClock::LastShown;
        else if (value == "head_trigger") cfg.scheduler.clock = SpacingClock::HeadTrigger;
        else bad_value(line, key, "must be last_shown or head_trigger, got \"" + value + "\"");
    } else if (key == "llm.backend") {
        if (value != "mock" && value != "live")
            bad_value(line, key, "must be mock or live, got \"" + value + "\"");
        cfg.backend = value;
    } else if (key == "llm.base_url") {
        if (value.empty()) bad_value(line, key, "must not be empty");
        cfg.base_url = value;
    } else if (key == "llm.model") {
        if (value.empty()) bad_value(line, key, "must not be empty");
        cfg.model = value;
    } else if (key == "llm.timeout_s") {
        const double timeout = parse_number(line, key, value);
        if (timeout <= 0) bad_value(line, key, "must be positive");
        cfg.timeout_s = timeout;
    } else if (key == "llm.retries") {
        const int retries = parse_int(line, key, value);
        if (retries < 0) bad_value(line, key, "must not be negative");
        cfg.retries = retries;
    } else {
        throw ConfigError("config line " + std::to_string(line) + ": unknown key \"" + key +
                          "\"");
    }
}

}  // namespace

EngineConfig parse_config(const std::string& text) {
    EngineConfig cfg;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::size_t hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        const std::string line = trim(raw);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']')
                throw ParseError("config line " + std::to_string(line_no) +
                                 ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section != "scheduler" && section != "llm")
                throw ConfigError("config line " + std::to_string(line_no) +
                                  ": unknown section [" + section + "]");
            continue;
        }

        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("config line " + std::to_string(line_no) +
                             ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = unquote(trim(line.substr(eq + 1)));
        if (key.empty())
            throw ParseError("config line " + std::to_string(line_no) + ": empty key");

        const bool dotted = key.find('.') != std::string::npos;
        const std::string full = dotted ? key : (section.empty() ? key : section + "." + key);
        apply(cfg, full, value, line_no);
    }
    return cfg;
}

EngineConfig load_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot read config file " + file.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

}  // namespace reflectsql
