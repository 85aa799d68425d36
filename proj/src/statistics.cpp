#include "vieval/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vieval/rng.hpp"

namespace vieval::statistics {

BootstrapResult bootstrap(std::size_t n, const SetStatistic& statistic, std::size_t iterations,
                          std::uint64_t seed) {
    if (n == 0) throw UndefinedMetricError("bootstrap: no samples to resample");
    if (iterations == 0) throw UndefinedMetricError("bootstrap: zero iterations");

    std::vector<std::size_t> identity(n);
    std::iota(identity.begin(), identity.end(), std::size_t{0});

    BootstrapResult result;
    result.mean = statistic(identity);
    result.iterations = iterations;
    result.seed = seed;

    std::vector<double> replicas(iterations);
    std::vector<std::size_t> indices(n);
    for (std::size_t iter = 0; iter < iterations; ++iter) {
        rng::Engine eng(rng::derive_seed(seed, iter));
        for (std::size_t i = 0; i < n; ++i)
            indices[i] = static_cast<std::size_t>(rng::bounded(eng, n));
        replicas[iter] = statistic(indices);
    }

    // Replicas that all agree mean zero spread, exactly — guard against the
    // accumulated-rounding residue a naive variance would report.
    const bool all_equal =
        std::all_of(replicas.begin(), replicas.end(),
                    [&](double v) { return v == replicas.front(); });
    if (all_equal || iterations == 1) {
        result.std = 0.0;
        return result;
    }

    const double replica_mean =
        std::accumulate(replicas.begin(), replicas.end(), 0.0) /
        static_cast<double>(iterations);
    double squared = 0.0;
    for (double v : replicas) squared += (v - replica_mean) * (v - replica_mean);
    result.std = std::sqrt(squared / static_cast<double>(iterations - 1));
    return result;
}

BootstrapResult bootstrap(const std::vector<double>& per_sample_scores, std::size_t iterations,
                          std::uint64_t seed) {
    if (per_sample_scores.empty())
        throw UndefinedMetricError("bootstrap: no samples to resample");
    return bootstrap(
        per_sample_scores.size(),
        [&](const std::vector<std::size_t>& indices) {
            double total = 0.0;
            for (std::size_t i : indices) total += per_sample_scores[i];
            return total / static_cast<double>(indices.size());
        },
        iterations, seed);
}

}  // namespace vieval::statistics
