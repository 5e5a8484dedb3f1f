#pragma once

#include <string>
#include <vector>

#include "reflectsql/prompt_builder.hpp"
#include "reflectsql/session_store.hpp"

namespace reflectsql {

// Pulls candidate SQL statements out of raw completion text: prose lines,
// code-fence markers, and list numbering are stripped; statements begin
// with CREATE, SELECT, or ALTER and may span lines while their parentheses
// stay open. Results are normalized (single line, no trailing semicolon).
std::vector<std::string> extract_statements(const std::string& raw);

struct SyntaxCheck {
    bool pass = false;
    std::string reason;  // empty on pass
};

// Validates one statement against the grammar subset the generator is
// asked for: CREATE INDEX with a non-empty column list, CREATE TABLE ...
// AS (SELECT ...), SELECT with FROM, ALTER TABLE. Checks balanced
// parentheses, identifier well-formedness, and that joins carry ON
// conditions.
SyntaxCheck check_syntax(const std::string& sql);

// Ordered repair list for common generation slips:
//   1. append the closing parenthesis when exactly one is missing
//   2. give an ON-less join its condition when the session registry knows
//      a column shared by both tables (never guessed otherwise)
//   3. drop trailing commas in column lists
//   4. strip stray markdown backticks
// Idempotent; text it cannot mend is returned as-is (and will still fail
// check_syntax).
std::string apply_fixes(const std::string& sql, const SessionState* state = nullptr);

enum class AltStatus { Valid, Repaired, Invalid };

struct AlternativeOutcome {
    AltStatus status = AltStatus::Invalid;
    std::string original;
    std::string fixed;   // usable text for Valid/Repaired
    std::string reason;  // failure reason for Invalid
};

struct ValidationOutcome {
    std::vector<AlternativeOutcome> alternatives;
    bool accept = false;
    // First expected_alternatives usable statements, in generation order.
    std::vector<std::string> accepted;
};

// Full post-processing pass: extract, check, repair, recheck. accept
// requires the type's strict count: 3 for composite order, 2 for composite
// vs single (the prompts demand exact counts), at least 1 for the
// denormalization types.
ValidationOutcome validate_alternatives(const std::string& raw, const LlmPrompt& prompt,
                                        const SessionState* state = nullptr);

}  // namespace reflectsql
