#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vieval/common.hpp"
#include "vieval/corpus.hpp"

namespace vieval::model_gateway {

/// Sampling parameters sent with every generation request.
struct GenerationConfig {
    double temperature = 1.0;
    int top_k = 1;
    double repetition_penalty = 1.1;
    std::size_t max_new_tokens = 100;
    std::optional<std::uint64_t> seed;
};

struct TokenLogprob {
    std::string text;
    double logprob = 0.0;  // <= 0

    bool operator==(const TokenLogprob&) const = default;
};

enum class FinishReason { length, stop, error };

std::string finish_reason_to_string(FinishReason r);
FinishReason finish_reason_from_string(const std::string& s);

/// One model response. When `tokens` is present the concatenated token texts
/// reconstruct `text` exactly (enforced at the protocol boundary).
struct ModelOutput {
    std::string text;
    std::optional<std::vector<TokenLogprob>> tokens;
    FinishReason finish_reason = FinishReason::stop;
    double latency_seconds = 0.0;
};

/// Connection settings for a remote text-generation endpoint.
struct EndpointSpec {
    std::string base_url;  // e.g. http://127.0.0.1:8080
    double timeout_seconds = 60.0;
    int max_retries = 3;
    std::map<std::string, std::string> headers;
    /// First retry waits this long; each later retry doubles it. Kept
    /// configurable so tests run without sleeping.
    double retry_base_delay_seconds = 0.5;
};

/// Anything that can generate text and (optionally) score continuations.
class Backend {
public:
    virtual ~Backend() = default;
    virtual ModelOutput generate(const std::string& prompt, const GenerationConfig& cfg) = 0;
    /// Sum of log p(token | prefix) over the continuation's tokens plus the
    /// end-of-sequence token. Raises CapabilityError when unsupported.
    virtual double score_continuation(const std::string& prompt,
                                      const std::string& continuation) = 0;
};

/// HTTP adapter speaking the JSON protocol of common inference servers:
///   POST {base}/generate  {inputs, parameters:{max_new_tokens, temperature,
///                          top_k, repetition_penalty, seed, details:true}}
///     -> {generated_text, details:{tokens:[{text, logprob}], finish_reason}}
///   POST {base}/score     {prompt, continuation}
///     -> {token_logprobs:[...]}  (end-of-sequence logprob included last)
///
/// Transient failures (transport errors, timeouts, non-2xx) are retried
/// max_retries times with exponential backoff; /score answering 404 or 501
/// raises CapabilityError so callers can degrade to generation-only metrics.
/// If the VIEVAL_API_KEY environment variable is set, requests carry
/// "Authorization: Bearer <key>".
class HttpBackend : public Backend {
public:
    explicit HttpBackend(EndpointSpec spec);
    ModelOutput generate(const std::string& prompt, const GenerationConfig& cfg) override;
    double score_continuation(const std::string& prompt,
                              const std::string& continuation) override;
    /// Like score_continuation but returning the per-token list.
    std::vector<double> score_tokens(const std::string& prompt,
                                     const std::string& continuation);

private:
    std::string post_with_retries(const std::string& route, const std::string& body,
                                  bool scoring);
    EndpointSpec spec_;
};

/// POST a JSON body to {base_url}{route} under the endpoint's retry policy
/// (exponential backoff, max_retries+1 attempts) and return the 2xx response
/// body. With `capability_probe` set, 404/501 raise CapabilityError instead
/// of being retried. Exhausted retries raise EndpointError. Shared by the
/// generation client and the auxiliary scoring-service clients.
std::string post_json(const EndpointSpec& endpoint, const std::string& route,
                      const std::string& body, bool capability_probe = false);

/// Convenience one-shot forms.
ModelOutput generate(const EndpointSpec& endpoint, const std::string& prompt,
                     const GenerationConfig& cfg);
double score_continuation(const EndpointSpec& endpoint, const std::string& prompt,
                          const std::string& continuation);

/// The evaluation defaults: hard configuration (temperature 1.0, top_k 1,
/// repetition_penalty 1.1) or easy (0.1, 50, 1.0), with per-scenario
/// max_new_tokens budgets.
GenerationConfig default_config(corpus::Scenario scenario, bool easy = false);

}  // namespace vieval::model_gateway
