#include "vieval/mock_model.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "vieval/unicode.hpp"

namespace vieval::mock_model {

using nlohmann::json;

MockConfig parse_mock_config(const std::string& json_text, const std::string& origin) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw SchemaError(origin + ": invalid mock config JSON: " + e.what());
    }
    MockConfig cfg;
    if (j.contains("rules")) {
        for (const auto& r : j.at("rules")) {
            if (!r.contains("pattern") || !r.contains("reply"))
                throw SchemaError(origin + ": each rule needs 'pattern' and 'reply'");
            cfg.rules.push_back(
                {r.at("pattern").get<std::string>(), r.at("reply").get<std::string>()});
        }
    }
    if (j.contains("default_reply")) cfg.default_reply = j.at("default_reply").get<std::string>();
    if (j.contains("char_logprobs")) {
        for (auto it = j.at("char_logprobs").begin(); it != j.at("char_logprobs").end(); ++it) {
            double lp = it.value().get<double>();
            if (lp > 0) throw SchemaError(origin + ": char logprob must be <= 0");
            cfg.char_logprobs[it.key()] = lp;
        }
    }
    if (j.contains("default_char_logprob"))
        cfg.default_char_logprob = j.at("default_char_logprob").get<double>();
    if (j.contains("eos_logprob")) cfg.eos_logprob = j.at("eos_logprob").get<double>();
    if (j.contains("scoring_enabled")) cfg.scoring_enabled = j.at("scoring_enabled").get<bool>();
    if (cfg.default_char_logprob > 0 || cfg.eos_logprob > 0)
        throw SchemaError(origin + ": logprobs must be <= 0");
    return cfg;
}

MockConfig load_mock_config(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw SchemaError("cannot open mock config: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_mock_config(ss.str(), path);
}

MockBackend::MockBackend(MockConfig cfg) : cfg_(std::move(cfg)) {
    for (const auto& r : cfg_.rules) {
        try {
            compiled_.emplace_back(r.pattern, std::regex::ECMAScript);
        } catch (const std::regex_error& e) {
            throw SchemaError("mock rule pattern '" + r.pattern +
                              "' is not a valid regex: " + e.what());
        }
    }
}

double MockBackend::char_logprob(const std::string& utf8_char) const {
    auto it = cfg_.char_logprobs.find(utf8_char);
    return it == cfg_.char_logprobs.end() ? cfg_.default_char_logprob : it->second;
}

std::string MockBackend::pick_reply(const std::string& prompt) const {
    for (std::size_t i = 0; i < compiled_.size(); ++i) {
        std::smatch m;
        if (std::regex_search(prompt, m, compiled_[i]))
            return m.format(cfg_.rules[i].reply, std::regex_constants::format_default);
    }
    return cfg_.default_reply;
}

model_gateway::ModelOutput MockBackend::generate(const std::string& prompt,
                                                 const model_gateway::GenerationConfig& cfg) {
    std::string reply = pick_reply(prompt);
    std::vector<char32_t> cps = unicode::decode_utf8(reply);

    model_gateway::ModelOutput out;
    out.finish_reason = model_gateway::FinishReason::stop;
    if (cps.size() > cfg.max_new_tokens) {
        cps.resize(cfg.max_new_tokens);
        out.finish_reason = model_gateway::FinishReason::length;
    }
    std::vector<model_gateway::TokenLogprob> toks;
    toks.reserve(cps.size());
    std::string text;
    for (char32_t cp : cps) {
        std::string ch = unicode::encode_utf8({cp});
        toks.push_back({ch, char_logprob(ch)});
        text += ch;
    }
    out.text = std::move(text);
    out.tokens = std::move(toks);
    return out;
}

std::vector<double> MockBackend::score_tokens(const std::string& prompt,
                                              const std::string& continuation) {
    (void)prompt;  // the mock's character model is context-free
    if (!cfg_.scoring_enabled)
        throw CapabilityError("mock endpoint has continuation scoring disabled");
    std::vector<double> lps;
    for (char32_t cp : unicode::decode_utf8(continuation))
        lps.push_back(char_logprob(unicode::encode_utf8({cp})));
    lps.push_back(cfg_.eos_logprob);
    return lps;
}

double MockBackend::score_continuation(const std::string& prompt,
                                       const std::string& continuation) {
    double sum = 0.0;
    for (double lp : score_tokens(prompt, continuation)) sum += lp;
    return sum;
}

}  // namespace vieval::mock_model
