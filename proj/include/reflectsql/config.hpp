#pragma once

#include <filesystem>
#include <string>

#include "reflectsql/engine.hpp"

namespace reflectsql {

// Parses the key = value config format:
//
//   [scheduler]
//   tau_s = 300
//   drain = event            # or timer
//   timer_interval_s = 15
//   clock = last_shown       # or head_trigger
//
//   [llm]
//   backend = mock           # or live
//   base_url = "https://api.openai.com/v1"
//   model = gpt-3.5-turbo-instruct
//   timeout_s = 30
//   retries = 2
//
// Dotted keys (scheduler.tau_s = 300) work outside sections too. '#' starts
// a comment. Syntax problems raise ParseError naming the line; unknown keys
// and out-of-range values raise ConfigError.
EngineConfig parse_config(const std::string& text);

// Reads and parses `file`; ConfigError if it cannot be read.
EngineConfig load_config(const std::filesystem::path& file);

}  // namespace reflectsql
