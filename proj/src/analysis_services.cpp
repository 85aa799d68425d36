#include "vieval/analysis_services.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

namespace vieval::analysis_services {

namespace {

using nlohmann::json;

json parse_response(const std::string& body, const char* route) {
    try {
        return json::parse(body);
    } catch (const json::exception& e) {
        throw ProtocolError(std::string(route) + ": response is not JSON: " + e.what());
    }
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0.0, norm_a = 0.0, norm_b = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        norm_a += a[i] * a[i];
        norm_b += b[i] * b[i];
    }
    if (norm_a == 0.0 || norm_b == 0.0) return 0.0;
    return dot / (std::sqrt(norm_a) * std::sqrt(norm_b));
}

double mean_best_cosine(const std::vector<std::vector<double>>& from,
                        const std::vector<std::vector<double>>& against) {
    double total = 0.0;
    for (const auto& vec : from) {
        double best = -1.0;
        for (const auto& other : against) best = std::max(best, cosine(vec, other));
        total += best;
    }
    return total / static_cast<double>(from.size());
}

double greedy_f(const EmbeddingMatrix& prediction, const EmbeddingMatrix& reference) {
    double precision = mean_best_cosine(prediction.vectors, reference.vectors);
    double recall = mean_best_cosine(reference.vectors, prediction.vectors);
    if (precision + recall <= 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

}  // namespace

std::vector<ToxicityVerdict> classify_toxicity(const model_gateway::EndpointSpec& endpoint,
                                               const std::vector<std::string>& texts,
                                               std::size_t batch_size) {
    if (batch_size == 0) throw SchemaError("classify_toxicity: batch_size must be positive");
    std::vector<ToxicityVerdict> verdicts;
    verdicts.reserve(texts.size());
    for (std::size_t begin = 0; begin < texts.size(); begin += batch_size) {
        const std::size_t end = std::min(texts.size(), begin + batch_size);
        json request = {{"texts", json::array()}};
        for (std::size_t i = begin; i < end; ++i) request["texts"].push_back(texts[i]);

        json response =
            parse_response(model_gateway::post_json(endpoint, "/toxicity", request.dump()),
                           "toxicity");
        if (!response.contains("probs") || !response.at("probs").is_array())
            throw ProtocolError("toxicity: response lacks array field 'probs'");
        const json& probs = response.at("probs");
        if (probs.size() != end - begin)
            throw ProtocolError("toxicity: got " + std::to_string(probs.size()) +
                                " probabilities for " + std::to_string(end - begin) + " texts");
        for (const auto& p : probs) {
            if (!p.is_number())
                throw ProtocolError("toxicity: non-numeric probability in response");
            const double value = p.get<double>();
            if (!(value >= 0.0 && value <= 1.0))
                throw ProtocolError("toxicity: probability " + std::to_string(value) +
                                    " outside [0, 1]");
            verdicts.push_back(ToxicityVerdict{value});
        }
    }
    return verdicts;
}

EmbeddingMatrix embed(const model_gateway::EndpointSpec& endpoint, const std::string& text) {
    json request = {{"text", text}};
    json response =
        parse_response(model_gateway::post_json(endpoint, "/embed", request.dump()), "embed");
    if (!response.contains("dim") || !response.at("dim").is_number_integer())
        throw ProtocolError("embed: response lacks integer field 'dim'");
    if (!response.contains("vectors") || !response.at("vectors").is_array())
        throw ProtocolError("embed: response lacks array field 'vectors'");

    EmbeddingMatrix matrix;
    matrix.dim = response.at("dim").get<int>();
    if (matrix.dim <= 0) throw ProtocolError("embed: non-positive embedding dimension");
    for (const auto& row : response.at("vectors")) {
        if (!row.is_array() || row.size() != static_cast<std::size_t>(matrix.dim))
            throw ProtocolError("embed: vector length differs from dim");
        std::vector<double> vec;
        vec.reserve(row.size());
        for (const auto& v : row) {
            if (!v.is_number()) throw ProtocolError("embed: non-numeric vector component");
            vec.push_back(v.get<double>());
        }
        matrix.vectors.push_back(std::move(vec));
    }
    if (matrix.vectors.empty() && !text.empty())
        throw ProtocolError("embed: empty embedding matrix for non-empty text");
    return matrix;
}

double bert_score(const model_gateway::EndpointSpec& endpoint,
                  const metrics_text::TextPair& pair) {
    if (pair.prediction.empty())
        throw UndefinedMetricError("bert_score: prediction is empty");

    const EmbeddingMatrix prediction = embed(endpoint, pair.prediction);
    bool scored = false;
    double best = 0.0;
    for (const auto& reference_text : pair.references) {
        if (reference_text.empty()) continue;
        const EmbeddingMatrix reference = embed(endpoint, reference_text);
        if (reference.dim != prediction.dim)
            throw ProtocolError("embed: dimension changed between requests");
        const double f = greedy_f(prediction, reference);
        best = scored ? std::max(best, f) : f;
        scored = true;
    }
    if (!scored) throw UndefinedMetricError("bert_score: no non-empty reference");
    return best;
}

}  // namespace vieval::analysis_services
