#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "support/oracles.hpp"
#include "vieval/metrics_classification.hpp"
#include "vieval/rng.hpp"

using namespace vieval;
using namespace vieval::metrics_classification;

namespace {

std::vector<LabeledPrediction> preds_from(const std::vector<int>& gold,
                                          const std::vector<int>& predicted,
                                          const std::vector<double>& confidence = {}) {
    std::vector<LabeledPrediction> out;
    for (size_t i = 0; i < gold.size(); ++i) {
        double c = confidence.empty() ? 1.0 : confidence[i];
        out.push_back({gold[i], predicted[i], c});
    }
    return out;
}

}  // namespace

TEST_CASE("option probabilities are a stable softmax") {
    auto even = option_probs({-1.0, -1.0});
    CHECK(even.probs[0] == doctest::Approx(0.5));
    CHECK(even.probs[1] == doctest::Approx(0.5));

    auto skewed = option_probs({0.0, -std::log(3.0)});
    CHECK(skewed.probs[0] == doctest::Approx(0.75));
    CHECK(skewed.probs[1] == doctest::Approx(0.25));

    // shift invariance, probability simplex, argmax preservation
    rng::Engine eng(4242ULL);
    for (int it = 0; it < 50; ++it) {
        std::vector<double> lps;
        size_t n = 2 + rng::bounded(eng, 5);
        for (size_t i = 0; i < n; ++i) lps.push_back(-5.0 + 10.0 * rng::uniform01(eng));
        auto base = option_probs(lps);
        double sum = 0.0;
        for (double p : base.probs) sum += p;
        CHECK(std::fabs(sum - 1.0) <= 1e-12);
        size_t argmax_lp = 0, argmax_p = 0;
        for (size_t i = 1; i < n; ++i) {
            if (lps[i] > lps[argmax_lp]) argmax_lp = i;
            if (base.probs[i] > base.probs[argmax_p]) argmax_p = i;
        }
        CHECK(argmax_lp == argmax_p);
        std::vector<double> shifted = lps;
        for (double& lp : shifted) lp += 123.25;
        auto moved = option_probs(shifted);
        for (size_t i = 0; i < n; ++i) {
            CHECK(moved.probs[i] == doctest::Approx(base.probs[i]));
        }
    }

    // extreme magnitudes stay finite thanks to max subtraction
    auto extreme = option_probs({-1e4, -1e4 + std::log(3.0)});
    CHECK(extreme.probs[1] == doctest::Approx(0.75));

    CHECK_THROWS_AS(option_probs({0.0}), SchemaError);
    CHECK_THROWS_AS(option_probs({0.0, std::numeric_limits<double>::infinity()}),
                    UndefinedMetricError);
    CHECK_THROWS_AS(option_probs({0.0, std::nan("")}), UndefinedMetricError);
}

TEST_CASE("accuracy") {
    CHECK(accuracy(preds_from({0, 1, 2}, {0, 1, 2})) == doctest::Approx(1.0));
    CHECK(accuracy(preds_from({0, 1, 1, 0}, {0, 1, 1, 1})) == doctest::Approx(0.75));
    CHECK(accuracy(preds_from({0, 0}, {1, 1})) == doctest::Approx(0.0));
    CHECK_THROWS_AS(accuracy({}), UndefinedMetricError);
}

TEST_CASE("macro f1") {
    CHECK(macro_f1(preds_from({0, 1, 0, 1}, {0, 1, 0, 1}), 2) == doctest::Approx(1.0));
    // class 0: P=1, R=1/2 -> 2/3; class 1: P=2/3, R=1 -> 0.8
    CHECK(macro_f1(preds_from({0, 0, 1, 1}, {0, 1, 1, 1}), 2) ==
          doctest::Approx((2.0 / 3.0 + 0.8) / 2.0));
    // degenerate predictor hitting one class on balanced gold
    CHECK(macro_f1(preds_from({0, 1}, {0, 0}), 2) == doctest::Approx(1.0 / 3.0));
    // a class absent from gold and predictions still divides the mean
    CHECK(macro_f1(preds_from({0, 1, 0, 1}, {0, 1, 0, 1}), 3) == doctest::Approx(2.0 / 3.0));
    CHECK_THROWS_AS(macro_f1({}, 1), SchemaError);
}

TEST_CASE("binary auc-roc") {
    CHECK(auc_roc({{0.9, 1}, {0.8, 1}, {0.2, 0}, {0.1, 0}}) == doctest::Approx(1.0));
    CHECK(auc_roc({{0.9, 1}, {0.8, 1}, {0.7, 0}, {0.85, 0}}) == doctest::Approx(0.75));
    CHECK(auc_roc({{0.5, 1}, {0.5, 0}, {0.5, 1}, {0.5, 0}}) == doctest::Approx(0.5));
    CHECK_THROWS_AS(auc_roc({{0.4, 1}, {0.6, 1}}), UndefinedMetricError);

    rng::Engine eng(31337ULL);
    for (int it = 0; it < 60; ++it) {
        size_t n = 2 + rng::bounded(eng, 20);
        std::vector<std::pair<double, int>> scores;
        std::vector<int> labels;
        std::vector<double> values;
        bool has0 = false, has1 = false;
        for (size_t i = 0; i < n; ++i) {
            // quantized so ties actually occur
            double s = static_cast<double>(rng::bounded(eng, 5)) / 4.0;
            int g = static_cast<int>(rng::bounded(eng, 2));
            scores.push_back({s, g});
            values.push_back(s);
            labels.push_back(g);
            has0 = has0 || g == 0;
            has1 = has1 || g == 1;
        }
        if (!has0 || !has1) continue;
        double got = auc_roc(scores);
        CHECK(got == doctest::Approx(testsupport::auc_pair_counting(labels, values)));
        // invariance under a strictly monotone transform
        std::vector<std::pair<double, int>> warped = scores;
        for (auto& [s, g] : warped) s = std::exp(3.0 * s) - 2.0;
        CHECK(auc_roc(warped) == doctest::Approx(got));
    }
}

TEST_CASE("one-vs-rest macro auc") {
    // three classes; verify against the pair-counting oracle per class
    std::vector<std::vector<double>> probs = {
        {0.7, 0.2, 0.1}, {0.1, 0.6, 0.3}, {0.2, 0.3, 0.5},
        {0.5, 0.3, 0.2}, {0.3, 0.4, 0.3}, {0.25, 0.25, 0.5},
    };
    std::vector<int> gold = {0, 1, 2, 1, 1, 2};
    double expected = 0.0;
    int defined = 0;
    for (int c = 0; c < 3; ++c) {
        std::vector<int> labels;
        std::vector<double> values;
        for (size_t i = 0; i < gold.size(); ++i) {
            labels.push_back(gold[i] == c ? 1 : 0);
            values.push_back(probs[i][c]);
        }
        double o = testsupport::auc_pair_counting(labels, values);
        if (o >= 0.0) {
            expected += o;
            ++defined;
        }
    }
    CHECK(auc_roc_ovr(probs, gold) == doctest::Approx(expected / defined));

    // a class with no positives is skipped, not fatal
    std::vector<std::vector<double>> two = {{0.9, 0.05, 0.05}, {0.2, 0.7, 0.1}};
    CHECK_NOTHROW(auc_roc_ovr(two, {0, 1}));
    CHECK_THROWS_AS(auc_roc_ovr(two, {0, 0}), UndefinedMetricError);
}

TEST_CASE("expected calibration error with equal-mass bins") {
    CHECK(ece(preds_from({0, 1, 0}, {0, 1, 0}, {1.0, 1.0, 1.0})) == doctest::Approx(0.0));
    CHECK(ece(preds_from({0, 0, 0}, {1, 1, 1}, {1.0, 1.0, 1.0})) == doctest::Approx(1.0));

    // two bins of two: |0.7-0.5|/2 + |0.95-1.0|/2
    auto four = preds_from({1, 1, 1, 1}, {0, 1, 1, 1}, {0.6, 0.8, 0.9, 1.0});
    CHECK(ece(four, 2) == doctest::Approx(0.125));

    // remainder goes to the leading (lowest-confidence) bin: sizes 3 then 2
    auto five = preds_from({1, 1, 0, 0, 0}, {0, 0, 0, 0, 0}, {0.1, 0.2, 0.3, 0.9, 1.0});
    CHECK(ece(five, 2) == doctest::Approx((3.0 / 5.0) * std::fabs(0.2 - 1.0 / 3.0) +
                                          (2.0 / 5.0) * std::fabs(0.95 - 1.0)));

    // zero when every bin's accuracy equals its mean confidence
    auto balanced = preds_from({1, 0, 1, 1}, {1, 1, 1, 1}, {0.5, 0.5, 1.0, 1.0});
    CHECK(ece(balanced, 2) == doctest::Approx(0.0));

    CHECK_THROWS_AS(ece({}, 10), UndefinedMetricError);
    CHECK_THROWS_AS(ece(preds_from({0}, {0}), 0), SchemaError);

    // more bins than predictions degrades to one prediction per bin
    CHECK(ece(preds_from({0}, {0}, {1.0}), 10) == doctest::Approx(0.0));
}

TEST_CASE("accuracy at coverage") {
    auto p = preds_from({0, 0, 0, 0, 0, 0, 0, 0, 0, 0},
                        {0, 1, 1, 1, 1, 1, 1, 1, 1, 1},
                        {1.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9});
    CHECK(accuracy_at_coverage(p, 10.0) == doctest::Approx(1.0));
    CHECK(accuracy_at_coverage(p, 100.0) == doctest::Approx(accuracy(p)));

    // 20 preds at c=10 -> exactly the top 2 by confidence
    std::vector<LabeledPrediction> twenty;
    for (int i = 0; i < 20; ++i) {
        // top two confidences are 0.99 (correct) and 0.98 (wrong)
        double conf = 0.5 - i * 0.01;
        int correct = 0;
        if (i == 7) { conf = 0.99; correct = 1; }
        if (i == 13) { conf = 0.98; correct = 0; }
        twenty.push_back({1, correct ? 1 : 0, conf});
    }
    CHECK(accuracy_at_coverage(twenty, 10.0) == doctest::Approx(0.5));

    // ceil: 3 preds at c=50 -> top 2
    auto three = preds_from({1, 1, 1}, {1, 1, 0}, {0.9, 0.8, 0.7});
    CHECK(accuracy_at_coverage(three, 50.0) == doctest::Approx(1.0));

    // tie at the cutoff resolved by input order
    auto tied = preds_from({1, 1}, {1, 0}, {0.5, 0.5});
    CHECK(accuracy_at_coverage(tied, 50.0) == doctest::Approx(1.0));
    auto tied_rev = preds_from({1, 1}, {0, 1}, {0.5, 0.5});
    CHECK(accuracy_at_coverage(tied_rev, 50.0) == doctest::Approx(0.0));

    CHECK_THROWS_AS(accuracy_at_coverage({}, 10.0), UndefinedMetricError);
    CHECK_THROWS_AS(accuracy_at_coverage(p, 0.0), SchemaError);
    CHECK_THROWS_AS(accuracy_at_coverage(p, 101.0), SchemaError);
}
