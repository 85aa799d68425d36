#include <doctest.h>

#include <map>

#include "vieval/rng.hpp"

using namespace vieval::rng;

TEST_CASE("mt19937_64 reference value") {
    // The C++ standard fixes the 10000th output of a default-seeded
    // mt19937_64 — if this holds, our streams are portable.
    std::mt19937_64 eng;
    std::uint64_t x = 0;
    for (int i = 0; i < 10000; ++i) x = eng();
    CHECK(x == 9981545732273789042ULL);
}

TEST_CASE("bounded draw is reproducible and in range") {
    Engine a(42), b(42);
    for (int i = 0; i < 1000; ++i) {
        std::uint64_t n = 1 + (static_cast<std::uint64_t>(i) % 97);
        std::uint64_t x = bounded(a, n);
        CHECK(x == bounded(b, n));
        CHECK(x < n);
    }
    Engine c(7);
    CHECK(bounded(c, 0) == 0);
    CHECK(bounded(c, 1) == 0);
}

TEST_CASE("bounded draw is roughly uniform") {
    Engine eng(123);
    std::map<std::uint64_t, int> counts;
    const int draws = 60000;
    for (int i = 0; i < draws; ++i) ++counts[bounded(eng, 6)];
    for (auto& [v, c] : counts) {
        CHECK(v < 6);
        CHECK(c > draws / 6 - 600);
        CHECK(c < draws / 6 + 600);
    }
}

TEST_CASE("permutation and sampling") {
    Engine eng(5);
    auto p = permutation(eng, 10);
    std::vector<bool> seen(10, false);
    for (auto i : p) {
        CHECK(i < 10);
        CHECK_FALSE(seen[i]);
        seen[i] = true;
    }

    Engine e1(9), e2(9);
    auto s1 = sample_without_replacement(e1, 100, 5);
    auto s2 = sample_without_replacement(e2, 100, 5);
    CHECK(s1 == s2);
    CHECK(s1.size() == 5);
    auto all = sample_without_replacement(e1, 3, 10);
    CHECK(all.size() == 3);
}

TEST_CASE("derived seeds differ across streams and repeat across calls") {
    CHECK(derive_seed(1, 0) != derive_seed(1, 1));
    CHECK(derive_seed(1, 0) != derive_seed(2, 0));
    CHECK(derive_seed(99, 7) == derive_seed(99, 7));
}

TEST_CASE("fnv1a known values") {
    // Frozen reference values for the standard FNV-1a 64-bit parameters.
    CHECK(fnv1a("") == 0xCBF29CE484222325ULL);
    CHECK(fnv1a("a") == 0xAF63DC4C8601EC8CULL);
    CHECK(fnv1a("foobar") == 0x85944171F73967E8ULL);
}

TEST_CASE("uniform01 bounds") {
    Engine eng(1);
    for (int i = 0; i < 1000; ++i) {
        double x = uniform01(eng);
        CHECK(x >= 0.0);
        CHECK(x < 1.0);
    }
}
