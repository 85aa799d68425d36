#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "vieval/common.hpp"

namespace vieval::statistics {

/// Uncertainty estimate from resampling the evaluation set with replacement.
struct BootstrapResult {
    double mean = 0.0;        // the statistic on the original, unresampled data
    double std = 0.0;         // sample standard deviation across replicas (>= 0)
    std::size_t iterations = 0;
    std::uint64_t seed = 0;

    bool operator==(const BootstrapResult&) const = default;
};

/// Statistic recomputed on one resampled replica: receives the drawn sample
/// indices (size n, each in [0, n), duplicates expected) and returns the
/// metric value on that multiset.
using SetStatistic = std::function<double(const std::vector<std::size_t>&)>;

/// Bootstrap a set-level statistic over n samples: each iteration draws n
/// indices with replacement (from a per-iteration seed derived from `seed`,
/// so execution order cannot matter) and recomputes `statistic`. `mean` is
/// the statistic over the original data; `std` is the sample standard
/// deviation across the replicas, exactly 0 when every replica agrees.
/// n = 0 or iterations = 0 raises UndefinedMetricError.
BootstrapResult bootstrap(std::size_t n, const SetStatistic& statistic,
                          std::size_t iterations = 1000, std::uint64_t seed = 0);

/// Fast path for decomposable metrics (means of per-sample scores): the
/// statistic is the mean of the resampled scores. Identical to the closure
/// form with a mean closure, draw for draw.
BootstrapResult bootstrap(const std::vector<double>& per_sample_scores,
                          std::size_t iterations = 1000, std::uint64_t seed = 0);

}  // namespace vieval::statistics
