#pragma once

#include <utility>
#include <vector>

#include "vieval/common.hpp"

namespace vieval::metrics_classification {

// Softmax-normalized option probabilities built from summed continuation
// log-probabilities (end-of-sequence token included by the scorer).
struct OptionScores {
    std::vector<double> option_logprobs;
    std::vector<double> probs;  // softmax(option_logprobs)
};

struct LabeledPrediction {
    int gold = 0;
    int predicted = 0;
    double confidence = 0.0;  // probability assigned to the predicted label
};

// Numerically stable softmax over option log-probabilities.
OptionScores option_probs(const std::vector<double>& option_logprobs);

double accuracy(const std::vector<LabeledPrediction>& preds);

// Unweighted mean of per-class F1 over all n_classes classes; classes absent
// from both gold and predictions contribute F1 = 0 and are still counted.
double macro_f1(const std::vector<LabeledPrediction>& preds, int n_classes);

// Binary AUC-ROC in the rank-sum (Mann-Whitney) form, ties counted one half.
// Each entry is (positive-class probability, gold label in {0,1}).
double auc_roc(const std::vector<std::pair<double, int>>& scores);

// Multiclass AUC-ROC: one-vs-rest, macro-averaged over the classes for which
// both a positive and a negative example exist.
double auc_roc_ovr(const std::vector<std::vector<double>>& class_probs,
                   const std::vector<int>& gold);

// Expected calibration error over equal-mass confidence bins; any remainder
// is spread over the leading (lowest-confidence) bins.
double ece(const std::vector<LabeledPrediction>& preds, int n_bins = 10);

// Accuracy over the ceil(c*N/100) highest-confidence predictions; ties at the
// cutoff are broken by input order.
double accuracy_at_coverage(const std::vector<LabeledPrediction>& preds, double c_percent = 10.0);

}  // namespace vieval::metrics_classification
