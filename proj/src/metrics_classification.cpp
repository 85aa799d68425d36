#include "vieval/metrics_classification.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace vieval::metrics_classification {

OptionScores option_probs(const std::vector<double>& option_logprobs) {
    if (option_logprobs.size() < 2) {
        throw SchemaError("option probabilities need at least two options");
    }
    for (double lp : option_logprobs) {
        if (!std::isfinite(lp)) {
            throw UndefinedMetricError("option probabilities undefined for non-finite log-probability");
        }
    }
    OptionScores scores;
    scores.option_logprobs = option_logprobs;
    double max_lp = *std::max_element(option_logprobs.begin(), option_logprobs.end());
    double denom = 0.0;
    for (double lp : option_logprobs) denom += std::exp(lp - max_lp);
    scores.probs.reserve(option_logprobs.size());
    for (double lp : option_logprobs) scores.probs.push_back(std::exp(lp - max_lp) / denom);
    return scores;
}

double accuracy(const std::vector<LabeledPrediction>& preds) {
    if (preds.empty()) throw UndefinedMetricError("accuracy undefined for an empty prediction list");
    size_t correct = 0;
    for (const auto& p : preds) {
        if (p.predicted == p.gold) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(preds.size());
}

double macro_f1(const std::vector<LabeledPrediction>& preds, int n_classes) {
    if (n_classes < 2) throw SchemaError("macro F1 needs at least two classes");
    double f1_sum = 0.0;
    for (int c = 0; c < n_classes; ++c) {
        int64_t tp = 0, fp = 0, fn = 0;
        for (const auto& p : preds) {
            if (p.predicted == c && p.gold == c) ++tp;
            else if (p.predicted == c) ++fp;
            else if (p.gold == c) ++fn;
        }
        double precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
        double recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
        if (precision + recall > 0.0) f1_sum += 2.0 * precision * recall / (precision + recall);
    }
    return f1_sum / static_cast<double>(n_classes);
}

double auc_roc(const std::vector<std::pair<double, int>>& scores) {
    size_t n_pos = 0, n_neg = 0;
    for (const auto& [score, gold] : scores) {
        if (gold == 1) ++n_pos;
        else ++n_neg;
    }
    if (n_pos == 0 || n_neg == 0) {
        throw UndefinedMetricError("AUC-ROC undefined when only one class is present");
    }

    // Rank-sum form with average ranks for ties.
    std::vector<size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a].first < scores[b].first; });

    double pos_rank_sum = 0.0;
    size_t i = 0;
    while (i < order.size()) {
        size_t j = i;
        while (j < order.size() && scores[order[j]].first == scores[order[i]].first) ++j;
        double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (size_t k = i; k < j; ++k) {
            if (scores[order[k]].second == 1) pos_rank_sum += avg_rank;
        }
        i = j;
    }
    double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
    return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double auc_roc_ovr(const std::vector<std::vector<double>>& class_probs,
                   const std::vector<int>& gold) {
    if (class_probs.size() != gold.size()) {
        throw SchemaError("probability rows and gold labels differ in length");
    }
    if (class_probs.empty()) throw UndefinedMetricError("AUC-ROC undefined for an empty input");
    size_t n_classes = class_probs.front().size();
    double sum = 0.0;
    size_t defined = 0;
    for (size_t c = 0; c < n_classes; ++c) {
        std::vector<std::pair<double, int>> scores;
        scores.reserve(gold.size());
        bool has_pos = false, has_neg = false;
        for (size_t i = 0; i < gold.size(); ++i) {
            if (class_probs[i].size() != n_classes) {
                throw SchemaError("ragged probability rows");
            }
            int is_pos = gold[i] == static_cast<int>(c) ? 1 : 0;
            has_pos = has_pos || is_pos == 1;
            has_neg = has_neg || is_pos == 0;
            scores.emplace_back(class_probs[i][c], is_pos);
        }
        if (!has_pos || !has_neg) continue;  // class undefined one-vs-rest; skipped
        sum += auc_roc(scores);
        ++defined;
    }
    if (defined == 0) {
        throw UndefinedMetricError("AUC-ROC undefined when only one class is present");
    }
    return sum / static_cast<double>(defined);
}

double ece(const std::vector<LabeledPrediction>& preds, int n_bins) {
    if (preds.empty()) throw UndefinedMetricError("calibration error undefined for an empty prediction list");
    if (n_bins < 1) throw SchemaError("calibration error needs at least one bin");

    std::vector<size_t> order(preds.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return preds[a].confidence < preds[b].confidence;
    });

    const size_t n = preds.size();
    const size_t bins = std::min<size_t>(static_cast<size_t>(n_bins), n);
    const size_t base = n / bins;
    const size_t remainder = n % bins;

    double total = 0.0;
    size_t start = 0;
    for (size_t b = 0; b < bins; ++b) {
        size_t size = base + (b < remainder ? 1 : 0);
        double conf_sum = 0.0, correct = 0.0;
        for (size_t k = start; k < start + size; ++k) {
            const auto& p = preds[order[k]];
            conf_sum += p.confidence;
            if (p.predicted == p.gold) correct += 1.0;
        }
        double sz = static_cast<double>(size);
        total += (sz / static_cast<double>(n)) * std::fabs(conf_sum / sz - correct / sz);
        start += size;
    }
    return total;
}

double accuracy_at_coverage(const std::vector<LabeledPrediction>& preds, double c_percent) {
    if (preds.empty()) throw UndefinedMetricError("coverage accuracy undefined for an empty prediction list");
    if (!(c_percent > 0.0) || c_percent > 100.0) {
        throw SchemaError("coverage percentage must be in (0, 100]");
    }
    std::vector<size_t> order(preds.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return preds[a].confidence > preds[b].confidence;
    });
    size_t take = static_cast<size_t>(
        std::ceil(c_percent * static_cast<double>(preds.size()) / 100.0));
    take = std::min(take, preds.size());
    size_t correct = 0;
    for (size_t k = 0; k < take; ++k) {
        const auto& p = preds[order[k]];
        if (p.predicted == p.gold) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(take);
}

}  // namespace vieval::metrics_classification
