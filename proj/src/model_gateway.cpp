#include "vieval/model_gateway.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace vieval::model_gateway {

using nlohmann::json;

std::string finish_reason_to_string(FinishReason r) {
    switch (r) {
        case FinishReason::length: return "length";
        case FinishReason::stop: return "stop";
        case FinishReason::error: return "error";
    }
    return "error";
}

FinishReason finish_reason_from_string(const std::string& s) {
    if (s == "length") return FinishReason::length;
    if (s == "stop" || s == "eos_token" || s == "stop_sequence") return FinishReason::stop;
    return FinishReason::error;
}

HttpBackend::HttpBackend(EndpointSpec spec) : spec_(std::move(spec)) {}

std::string post_json(const EndpointSpec& endpoint, const std::string& route,
                      const std::string& body, bool capability_probe) {
    httplib::Client client(endpoint.base_url);
    client.set_connection_timeout(std::chrono::duration<double>(endpoint.timeout_seconds));
    client.set_read_timeout(std::chrono::duration<double>(endpoint.timeout_seconds));

    httplib::Headers headers;
    for (const auto& [k, v] : endpoint.headers) headers.emplace(k, v);
    if (const char* key = std::getenv("VIEVAL_API_KEY"))
        headers.emplace("Authorization", std::string("Bearer ") + key);

    std::string last_error;
    for (int attempt = 0; attempt <= endpoint.max_retries; ++attempt) {
        if (attempt > 0) {
            double delay =
                endpoint.retry_base_delay_seconds * static_cast<double>(1 << (attempt - 1));
            if (delay > 0)
                std::this_thread::sleep_for(std::chrono::duration<double>(delay));
        }
        auto res = client.Post(route, headers, body, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 200 && res->status < 300) return res->body;
        if (capability_probe && (res->status == 404 || res->status == 501))
            throw CapabilityError("endpoint " + endpoint.base_url +
                                  " does not support continuation scoring (HTTP " +
                                  std::to_string(res->status) + ")");
        last_error = "HTTP " + std::to_string(res->status) + ": " +
                     res->body.substr(0, 200);
    }
    throw EndpointError("POST " + endpoint.base_url + route + " failed after " +
                        std::to_string(endpoint.max_retries + 1) + " attempts; last error: " +
                        last_error);
}

std::string HttpBackend::post_with_retries(const std::string& route, const std::string& body,
                                           bool scoring) {
    return post_json(spec_, route, body, scoring);
}

ModelOutput HttpBackend::generate(const std::string& prompt, const GenerationConfig& cfg) {
    json params = {
        {"max_new_tokens", cfg.max_new_tokens},
        {"temperature", cfg.temperature},
        {"top_k", cfg.top_k},
        {"repetition_penalty", cfg.repetition_penalty},
        {"details", true},
    };
    if (cfg.seed) params["seed"] = *cfg.seed;
    json req = {{"inputs", prompt}, {"parameters", params}};

    const auto t0 = std::chrono::steady_clock::now();
    std::string body = post_with_retries("/generate", req.dump(), false);
    const auto t1 = std::chrono::steady_clock::now();

    json res;
    try {
        res = json::parse(body);
    } catch (const json::exception& e) {
        throw ProtocolError("generate: response is not JSON: " + std::string(e.what()));
    }
    if (!res.contains("generated_text") || !res.at("generated_text").is_string())
        throw ProtocolError("generate: response lacks string field 'generated_text'");

    ModelOutput out;
    out.text = res.at("generated_text").get<std::string>();
    out.latency_seconds = std::chrono::duration<double>(t1 - t0).count();
    out.finish_reason = FinishReason::stop;
    if (res.contains("details") && res.at("details").is_object()) {
        const json& det = res.at("details");
        if (det.contains("finish_reason"))
            out.finish_reason =
                finish_reason_from_string(det.at("finish_reason").get<std::string>());
        if (det.contains("tokens") && det.at("tokens").is_array()) {
            std::vector<TokenLogprob> toks;
            std::string concat;
            for (const auto& t : det.at("tokens")) {
                if (!t.contains("text") || !t.contains("logprob"))
                    throw ProtocolError("generate: token entry lacks text/logprob");
                TokenLogprob tl{t.at("text").get<std::string>(),
                                t.at("logprob").get<double>()};
                concat += tl.text;
                toks.push_back(std::move(tl));
            }
            if (concat != out.text)
                throw ProtocolError(
                    "generate: token texts do not reconstruct generated_text");
            out.tokens = std::move(toks);
        }
    }
    return out;
}

std::vector<double> HttpBackend::score_tokens(const std::string& prompt,
                                              const std::string& continuation) {
    json req = {{"prompt", prompt}, {"continuation", continuation}};
    std::string body = post_with_retries("/score", req.dump(), true);
    json res;
    try {
        res = json::parse(body);
    } catch (const json::exception& e) {
        throw ProtocolError("score: response is not JSON: " + std::string(e.what()));
    }
    if (!res.contains("token_logprobs") || !res.at("token_logprobs").is_array())
        throw ProtocolError("score: response lacks array field 'token_logprobs'");
    std::vector<double> lps;
    for (const auto& v : res.at("token_logprobs")) {
        if (!v.is_number()) throw ProtocolError("score: token_logprobs must be numbers");
        lps.push_back(v.get<double>());
    }
    if (lps.empty())
        throw ProtocolError("score: token_logprobs empty (end-of-sequence expected)");
    return lps;
}

double HttpBackend::score_continuation(const std::string& prompt,
                                       const std::string& continuation) {
    double sum = 0.0;
    for (double lp : score_tokens(prompt, continuation)) sum += lp;
    return sum;
}

ModelOutput generate(const EndpointSpec& endpoint, const std::string& prompt,
                     const GenerationConfig& cfg) {
    return HttpBackend(endpoint).generate(prompt, cfg);
}

double score_continuation(const EndpointSpec& endpoint, const std::string& prompt,
                          const std::string& continuation) {
    return HttpBackend(endpoint).score_continuation(prompt, continuation);
}

GenerationConfig default_config(corpus::Scenario scenario, bool easy) {
    GenerationConfig cfg;
    if (easy) {
        cfg.temperature = 0.1;
        cfg.top_k = 50;
        cfg.repetition_penalty = 1.0;
    } else {
        cfg.temperature = 1.0;
        cfg.top_k = 1;
        cfg.repetition_penalty = 1.1;
    }
    using corpus::Scenario;
    switch (scenario) {
        case Scenario::question_answering: cfg.max_new_tokens = 100; break;
        case Scenario::summarization: cfg.max_new_tokens = 300; break;
        case Scenario::sentiment: cfg.max_new_tokens = 50; break;
        case Scenario::text_classification: cfg.max_new_tokens = 50; break;
        case Scenario::knowledge_openended: cfg.max_new_tokens = 100; break;
        case Scenario::knowledge_mcq: cfg.max_new_tokens = 50; break;
        case Scenario::toxicity_detection: cfg.max_new_tokens = 50; break;
        case Scenario::information_retrieval: cfg.max_new_tokens = 50; break;
        case Scenario::language_modeling_mlm: cfg.max_new_tokens = 500; break;
        case Scenario::language_modeling_spelling: cfg.max_new_tokens = 500; break;
        case Scenario::reasoning_synthetic: cfg.max_new_tokens = 100; break;
        case Scenario::reasoning_math: cfg.max_new_tokens = 1000; break;
        case Scenario::translation: cfg.max_new_tokens = 500; break;
    }
    return cfg;
}

}  // namespace vieval::model_gateway
