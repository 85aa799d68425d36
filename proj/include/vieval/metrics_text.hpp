#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vieval/common.hpp"

namespace vieval::metrics_text {

// A model output paired with one or more acceptable references.
struct TextPair {
    std::string prediction;
    std::vector<std::string> references;  // must be non-empty
};

enum class RougeVariant { R1, R2, RL };

// Extractive-fragment statistics of a summary against its source article.
struct FragmentStats {
    double coverage = 0.0;     // fraction of summary words inside shared fragments
    double density = 0.0;      // mean squared fragment length per summary word
    double compression = 0.0;  // article words / summary words
};

// Edit distances plus rates. Rates are absent when the reference is empty
// (the undefined-metric condition); distances are always present.
struct EditMetrics {
    double ced = 0.0;  // character-level edit distance
    double wed = 0.0;  // word-level edit distance
    std::optional<double> cer;
    std::optional<double> wer;
};

struct HleporParams {
    double alpha = 9.0;       // recall weight inside the harmonic precision/recall
    double beta = 1.0;        // precision weight
    double weight_elp = 2.0;  // enhanced length penalty weight
    double weight_pos = 1.0;  // position-difference penalty weight
    double weight_pr = 7.0;   // harmonic precision/recall weight
};

// Canonical answer normalization: NFC, trim, collapse whitespace, lowercase,
// strip terminal punctuation.
std::string normalize_answer(const std::string& text);

// NFC then split on Unicode whitespace.
std::vector<std::string> tokenize(const std::string& text);
// Same, lowercased first.
std::vector<std::string> tokenize_lower(const std::string& text);

int exact_match(const TextPair& p);
double token_f1(const TextPair& p);
double rouge(const TextPair& p, RougeVariant variant);
FragmentStats fragment_stats(const std::string& article, const std::string& summary);
EditMetrics edit_metrics(const std::string& reference, const std::string& hypothesis);
double perplexity(const std::vector<double>& token_logprobs);
double bleu(const std::vector<TextPair>& corpus);
double hlepor(const TextPair& p, const HleporParams& params = {});

}  // namespace vieval::metrics_text
