#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "fgml/error.hpp"
#include "fgml/pmath.hpp"
#include "fgml/rng.hpp"

using namespace fgml;

TEST_CASE("identical (seed, stream) reproduces the sequence") {
    RngStream a(123, 7);
    RngStream b(123, 7);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different streams and seeds diverge") {
    RngStream a(123, 7);
    RngStream b(123, 8);
    RngStream c(124, 7);
    int same_ab = 0, same_ac = 0;
    for (int i = 0; i < 100; ++i) {
        const uint64_t va = a.next_u64();
        if (va == b.next_u64()) ++same_ab;
        if (va == c.next_u64()) ++same_ac;
    }
    CHECK(same_ab == 0);
    CHECK(same_ac == 0);
}

TEST_CASE("substream derivation is deterministic and order-sensitive") {
    RngStream base(42, 0);
    RngStream s1 = base.substream(3, 5);
    RngStream s2 = base.substream(3, 5);
    RngStream s3 = base.substream(5, 3);
    CHECK(s1.next_u64() == s2.next_u64());
    CHECK(s1.next_u64() != s3.next_u64());
}

TEST_CASE("uniform mean over 1e5 draws") {
    RngStream rng(2024, 1);
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) sum += rng.uniform(0.0, 1.0);
    CHECK(std::fabs(sum / n - 0.5) < 0.01);
}

TEST_CASE("normal moments over 1e5 draws") {
    RngStream rng(2024, 2);
    const int n = 100000;
    std::vector<double> draws(n);
    for (int i = 0; i < n; ++i) draws[i] = rng.normal(0.0, 1.0);
    const double mean = std::accumulate(draws.begin(), draws.end(), 0.0) / n;
    double var = 0.0;
    for (double d : draws) var += (d - mean) * (d - mean);
    var /= n;
    CHECK(std::fabs(mean) < 0.02);
    CHECK(std::fabs(var - 1.0) < 0.02);
}

TEST_CASE("uniform draws stay inside the half-open interval") {
    RngStream rng(9, 9);
    for (int i = 0; i < 10000; ++i) {
        const double v = rng.uniform(-2.5, 1.5);
        CHECK(v >= -2.5);
        CHECK(v < 1.5);
    }
}

TEST_CASE("invalid parameters are rejected") {
    RngStream rng(1, 1);
    CHECK_THROWS_AS(rng.uniform(1.0, 1.0), Error);
    CHECK_THROWS_AS(rng.uniform(2.0, 1.0), Error);
    CHECK_THROWS_AS(rng.normal(0.0, -1.0), Error);
    CHECK_THROWS_AS(rng.below(0), Error);
}

TEST_CASE("below is unbiased enough for shuffling") {
    RngStream rng(7, 3);
    std::vector<int> hits(5, 0);
    for (int i = 0; i < 50000; ++i) hits[rng.below(5)] += 1;
    for (int h : hits) CHECK(std::fabs(h / 50000.0 - 0.2) < 0.01);
}

TEST_CASE("shuffle is a permutation and seed-stable") {
    std::vector<size_t> a(100), b(100);
    std::iota(a.begin(), a.end(), 0);
    std::iota(b.begin(), b.end(), 0);
    RngStream r1(5, 5), r2(5, 5);
    shuffle_indices(a, r1);
    shuffle_indices(b, r2);
    CHECK(a == b);
    std::vector<size_t> sorted = a;
    std::sort(sorted.begin(), sorted.end());
    for (size_t i = 0; i < sorted.size(); ++i) CHECK(sorted[i] == i);
}

TEST_CASE("portable math kernels track libm closely") {
    RngStream rng(88, 8);
    for (int i = 0; i < 20000; ++i) {
        const double x = rng.uniform(1e-12, 4.0);
        CHECK(std::fabs(fgml::pmath::log(x) - std::log(x)) <
              1e-13 * std::max(1.0, std::fabs(std::log(x))));
        const double t = rng.uniform(-6.5, 6.5);
        CHECK(std::fabs(fgml::pmath::sin(t) - std::sin(t)) < 1e-13);
        CHECK(std::fabs(fgml::pmath::cos(t) - std::cos(t)) < 1e-13);
    }
    CHECK(fgml::pmath::sin(0.0) == 0.0);
    CHECK(fgml::pmath::cos(0.0) == 1.0);
    CHECK(fgml::pmath::log(1.0) == 0.0);
}
