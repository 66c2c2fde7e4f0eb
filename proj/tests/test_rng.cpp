#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "aoi_sim/rng.hpp"

using namespace aoisim;

TEST_CASE("same seed gives bit-identical streams") {
    Rng a(12345), b(12345);
    for (int i = 0; i < 1000; ++i) REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("different seeds give different streams") {
    Rng a(1), b(2);
    int equal = 0;
    for (int i = 0; i < 100; ++i)
        if (a.next_u64() == b.next_u64()) ++equal;
    REQUIRE(equal == 0);
}

TEST_CASE("derive_seed decorrelates adjacent masters and streams") {
    REQUIRE(derive_seed(1, 0) != derive_seed(2, 0));
    REQUIRE(derive_seed(1, 0) != derive_seed(1, 1));
    // Streams derived from adjacent masters should not collide pairwise.
    std::vector<std::uint64_t> seen;
    for (std::uint64_t m = 0; m < 50; ++m)
        for (std::uint64_t s = 0; s < 50; ++s) seen.push_back(derive_seed(m, s));
    std::sort(seen.begin(), seen.end());
    REQUIRE(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
}

TEST_CASE("uniform01 stays in [0, 1) and has the right mean") {
    Rng rng(7);
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform01();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    // 3 sigma of the sample mean: sqrt(1/12/n)
    REQUIRE(std::abs(sum / n - 0.5) < 3.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST_CASE("exponential matches its mean and variance") {
    Rng rng(11);
    const double mean = 60.0;
    const int n = 100000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.exponential(mean);
        REQUIRE(x > 0.0);
        sum += x;
        sumsq += x * x;
    }
    const double m = sum / n;
    const double var = sumsq / n - m * m;
    REQUIRE(std::abs(m - mean) / mean < 0.02);
    REQUIRE(std::abs(var - mean * mean) / (mean * mean) < 0.05);
}

TEST_CASE("bernoulli frequency matches p") {
    Rng rng(13);
    const double p = 0.3;
    const int n = 100000;
    long hits = 0;
    for (int i = 0; i < n; ++i)
        if (rng.bernoulli(p)) ++hits;
    const double freq = static_cast<double>(hits) / n;
    REQUIRE(std::abs(freq - p) < 3.0 * std::sqrt(p * (1 - p) / n));
}

TEST_CASE("gaussian matches mean and stddev") {
    Rng rng(17);
    const int n = 100000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.gaussian(3.0, 2.0);
        sum += x;
        sumsq += x * x;
    }
    const double m = sum / n;
    const double sd = std::sqrt(sumsq / n - m * m);
    REQUIRE(std::abs(m - 3.0) < 3.0 * 2.0 / std::sqrt(static_cast<double>(n)));
    REQUIRE(std::abs(sd - 2.0) / 2.0 < 0.02);
}
