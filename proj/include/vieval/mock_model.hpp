#pragma once

#include <map>
#include <regex>
#include <string>
#include <vector>

#include "vieval/model_gateway.hpp"

namespace vieval::mock_model {

/// Deterministic stand-in for a text-generation endpoint.
///
/// Tokenization is one token per Unicode codepoint. Replies come from an
/// ordered rule table: the first rule whose ECMAScript regex matches the
/// prompt wins, and its reply may reference capture groups as $1..$9.
/// Token log-probabilities come from a per-character table (default
/// -ln 2 per character, likewise for the end-of-sequence token), so every
/// probability-derived metric has closed-form expected values.
struct MockRule {
    std::string pattern;
    std::string reply;
};

struct MockConfig {
    std::vector<MockRule> rules;
    std::string default_reply;  // used when no rule matches
    std::map<std::string, double> char_logprobs;  // UTF-8 char -> logprob
    double default_char_logprob = -0.6931471805599453;  // -ln 2
    double eos_logprob = -0.6931471805599453;
    bool scoring_enabled = true;
};

/// Parse a JSON mock configuration:
///   {"rules": [{"pattern": "...", "reply": "..."}], "default_reply": "...",
///    "char_logprobs": {"A": 0.0}, "default_char_logprob": -0.69,
///    "eos_logprob": -0.69, "scoring_enabled": true}
MockConfig parse_mock_config(const std::string& json_text,
                             const std::string& origin = "<memory>");
MockConfig load_mock_config(const std::string& path);

class MockBackend : public model_gateway::Backend {
public:
    explicit MockBackend(MockConfig cfg);

    /// Pure function of (prompt, cfg): picks the reply by rule table and
    /// truncates to max_new_tokens codepoints (finish_reason=length).
    model_gateway::ModelOutput generate(const std::string& prompt,
                                        const model_gateway::GenerationConfig& cfg) override;

    /// Sum of per-character logprobs over the continuation plus the
    /// end-of-sequence logprob. CapabilityError when scoring is disabled.
    double score_continuation(const std::string& prompt,
                              const std::string& continuation) override;

    /// Per-token logprobs (end-of-sequence last), as served over HTTP.
    std::vector<double> score_tokens(const std::string& prompt,
                                     const std::string& continuation);

    const MockConfig& config() const { return cfg_; }

private:
    double char_logprob(const std::string& utf8_char) const;
    std::string pick_reply(const std::string& prompt) const;

    MockConfig cfg_;
    std::vector<std::regex> compiled_;
};

}  // namespace vieval::mock_model
