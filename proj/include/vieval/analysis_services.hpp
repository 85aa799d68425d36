#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "vieval/common.hpp"
#include "vieval/metrics_text.hpp"
#include "vieval/model_gateway.hpp"

namespace vieval::analysis_services {

/// Probability that one text is toxic, as judged by the classifier endpoint.
struct ToxicityVerdict {
    double p_toxic = 0.0;  // always within [0, 1]

    bool operator==(const ToxicityVerdict&) const = default;
};

/// Per-token embedding vectors for one text.
struct EmbeddingMatrix {
    std::vector<std::vector<double>> vectors;  // one entry per token, each of length dim
    int dim = 0;
};

/// Classify texts via POST {base}/toxicity ({texts:[...]} -> {probs:[...]}),
/// issuing one request per batch of `batch_size`. Returns one verdict per
/// input text, in input order; an empty input yields an empty result without
/// touching the endpoint. Endpoint failure after retries raises
/// EndpointError; a count mismatch or probability outside [0,1] raises
/// ProtocolError.
std::vector<ToxicityVerdict> classify_toxicity(const model_gateway::EndpointSpec& endpoint,
                                               const std::vector<std::string>& texts,
                                               std::size_t batch_size = 32);

/// Fetch token embeddings via POST {base}/embed ({text} -> {dim, vectors}).
/// A malformed response — missing fields, ragged vectors, or an empty matrix
/// for non-empty text — raises ProtocolError.
EmbeddingMatrix embed(const model_gateway::EndpointSpec& endpoint, const std::string& text);

/// Greedy-matching F-score over token embeddings: precision averages each
/// prediction token's best cosine similarity against the reference tokens,
/// recall averages each reference token's best cosine against the prediction
/// tokens, and the score is their harmonic mean (0 when both vanish), taken
/// as the maximum over the references. No IDF weighting is applied. An empty
/// prediction, or no non-empty reference, raises UndefinedMetricError.
double bert_score(const model_gateway::EndpointSpec& endpoint,
                  const metrics_text::TextPair& pair);

}  // namespace vieval::analysis_services
