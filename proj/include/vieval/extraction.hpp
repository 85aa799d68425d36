#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "vieval/common.hpp"

namespace vieval::extraction {

enum class ParsePath { fenced_block, bare_object, regex_fallback, none };

using Scalar = std::variant<int64_t, double, std::string>;

// A structured answer recovered from a model generation.
struct ParsedAnswer {
    std::map<std::string, Scalar> fields;
    std::size_t span_begin = 0;  // byte range of the parsed region
    std::size_t span_end = 0;
    ParsePath parse_path = ParsePath::none;
};

// Recovery ladder: first ```json fenced block, then the first balanced brace
// object mentioning an expected key, then a per-key regex fallback. Tolerates
// single quotes, backtick quoting, unquoted keys, trailing commas, and
// surrounding prose. Never throws on arbitrary input.
ParsedAnswer extract_structured(const std::string& generation,
                                const std::vector<std::string>& expected_keys);

// Contents of the last balanced \boxed{...}; falls back to an extracted
// "answer" field. Absent when neither exists.
std::optional<std::string> extract_boxed(const std::string& generation);

// Numeric-rational equivalence after stripping \boxed, \text{...}, unit
// words, commas, and surrounding \( \). Non-numeric forms fall back to
// normalized string comparison; symbolic algebra is out of scope.
bool math_equivalent(const std::string& a, const std::string& b);

// Map a parsed answer onto a label index: in-range integer, option letter, or
// normalized label-name text. Confidence fields are ignored.
std::optional<int> match_label(const ParsedAnswer& parsed,
                               const std::vector<std::string>& label_names, int n_labels);

}  // namespace vieval::extraction
