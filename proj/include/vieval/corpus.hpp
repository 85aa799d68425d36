#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vieval/common.hpp"

namespace vieval::corpus {

/// The evaluation scenarios the harness knows how to run.
enum class Scenario {
    question_answering,
    summarization,
    sentiment,
    text_classification,
    knowledge_openended,
    knowledge_mcq,
    toxicity_detection,
    information_retrieval,
    language_modeling_mlm,
    language_modeling_spelling,
    reasoning_synthetic,
    reasoning_math,
    translation,
};

Scenario scenario_from_string(const std::string& name);
std::string scenario_to_string(Scenario s);

/// One evaluation instance. Which optional fields are present depends on the
/// scenario (see the README's record-format table).
struct EvalSample {
    std::string id;
    Scenario scenario = Scenario::question_answering;
    std::optional<std::string> context;
    std::optional<std::string> query;
    std::optional<std::vector<std::string>> choices;
    std::vector<std::string> references;
    std::optional<int> label;
    std::optional<std::map<std::string, int>> relevance;  // doc id -> graded relevance

    bool operator==(const EvalSample&) const = default;
};

/// A loaded dataset: train split (few-shot pool), test split (scored), and
/// scenario-level metadata. `docs` is the retrieval corpus for
/// information_retrieval datasets and empty elsewhere.
struct ScenarioDataset {
    Scenario scenario = Scenario::question_answering;
    std::vector<EvalSample> train;
    std::vector<EvalSample> test;
    std::optional<std::vector<std::string>> label_names;
    std::optional<std::string> source_language;
    std::optional<std::string> target_language;
    std::map<std::string, std::string> docs;  // doc id -> text

    bool operator==(const ScenarioDataset&) const = default;
};

/// Load a dataset from a UTF-8 JSON-lines file.
///
/// Line format:
///   - an optional first metadata line: {"label_names": [...],
///     "source_language": "...", "target_language": "..."} (any subset);
///   - document records {"doc_id": "...", "text": "..."} (retrieval corpora);
///   - sample records with per-scenario fields; optional "id" (defaults to
///     the 1-based line number) and "split": "train"|"test" (default "test").
///
/// Malformed lines raise SchemaError naming the line number; scenario
/// invariants (label ranges, required fields, unique test ids) are enforced.
ScenarioDataset load_dataset(const std::string& path, Scenario scenario);

/// Parse from an in-memory string (same format); `origin` names the source
/// in error messages.
ScenarioDataset parse_dataset(const std::string& text, Scenario scenario,
                              const std::string& origin = "<memory>");

/// Serialize back to the line format. load(serialize(ds)) == ds for every
/// valid dataset.
std::string serialize_dataset(const ScenarioDataset& ds);

/// Draw k distinct few-shot exemplars from the train split, deterministically
/// for a fixed seed, in draw order. k > |train| raises an error.
std::vector<EvalSample> sample_shots(const ScenarioDataset& ds, std::size_t k,
                                     std::uint64_t seed);

/// A retrieval query with a stable id.
struct Query {
    std::string id;
    std::string text;
};

/// Rank documents per query with Okapi BM25 (idf = ln(1 + (N-df+0.5)/(df+0.5)),
/// tokenization = lowercase + Unicode-whitespace split). Returns the top_n doc
/// ids per query, score-descending, ties broken by ascending doc id. A query
/// that tokenizes to nothing yields an empty list.
std::map<std::string, std::vector<std::string>> bm25_candidates(
    const std::vector<Query>& queries, const std::map<std::string, std::string>& docs,
    std::size_t top_n, double k1 = 1.2, double b = 0.75);

/// Ensure every relevant document is present in the candidate list: ids in
/// `relevant` missing from `candidates` are appended in ascending order.
std::vector<std::string> boost_candidates(const std::vector<std::string>& candidates,
                                          const std::vector<std::string>& relevant);

/// Tokenization shared by BM25 (and reused by word-level metrics):
/// lowercase, split on Unicode whitespace.
std::vector<std::string> tokenize_lower(const std::string& text);

}  // namespace vieval::corpus
