#pragma once

#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

/// Deterministic randomness.
///
/// std::mt19937_64 produces a bit-exact stream on every conforming
/// implementation, but std::uniform_int_distribution does not — its draw
/// algorithm is implementation-defined. Every place the harness needs
/// reproducible sampling (shot selection, perturbation, bootstrap) therefore
/// goes through the helpers below, which pin the draw algorithm.
namespace vieval::rng {

using Engine = std::mt19937_64;

/// Uniform integer in [0, n) via rejection sampling (unbiased, portable).
inline std::uint64_t bounded(Engine& eng, std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
        x = eng();
    } while (x >= limit);
    return x % n;
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Engine& eng) {
    return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

/// Fisher-Yates shuffle with the portable bounded draw.
template <typename T>
void shuffle(Engine& eng, std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(bounded(eng, i));
        std::swap(v[i - 1], v[j]);
    }
}

/// Random permutation of [0, n).
inline std::vector<std::size_t> permutation(Engine& eng, std::size_t n) {
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), 0);
    shuffle(eng, p);
    return p;
}

/// Sample k distinct indices from [0, n) in draw order (k > n returns all n,
/// still shuffled). Used for few-shot example selection.
inline std::vector<std::size_t> sample_without_replacement(Engine& eng, std::size_t n,
                                                           std::size_t k) {
    std::vector<std::size_t> p = permutation(eng, n);
    if (k < p.size()) p.resize(k);
    return p;
}

/// Derive a child seed from a parent seed and a stream index, so that
/// per-iteration / per-sample streams are independent yet reproducible.
/// SplitMix64 finalizer over the combined value.
inline std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream) {
    std::uint64_t z = parent + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// FNV-1a 64-bit hash: stable content hashing for config fingerprints.
inline std::uint64_t fnv1a(const std::string& data) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

}  // namespace vieval::rng
