#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "lsg/rng.hpp"

using lsg::Rng;
using lsg::Tensor;

TEST_CASE("identical seeds give identical streams") {
    Rng a(12345), b(12345);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng c(12345), d(12345);
    for (int i = 0; i < 100; ++i) CHECK(c.normal() == d.normal());
    Rng e(12346);
    bool any_diff = false;
    Rng f(12345);
    for (int i = 0; i < 16; ++i) any_diff |= (e.next_u64() != f.next_u64());
    CHECK(any_diff);
}

TEST_CASE("normal moments over 1e5 draws") {
    Rng rng(777);
    const std::size_t n = 100000;
    double s = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = rng.normal();
        s += x;
        sq += x * x;
    }
    const double mean = s / n;
    const double var = sq / n - mean * mean;
    CHECK(std::fabs(mean) < 0.02);
    CHECK(std::fabs(var - 1.0) < 0.03);
}

TEST_CASE("normal tensor fills row-major from the stream") {
    Rng a(5), b(5);
    Tensor t = a.normal_tensor({3, 4});
    for (std::size_t i = 0; i < 12; ++i) CHECK(t[i] == b.normal());
    CHECK(t.shape() == std::vector<std::size_t>{3, 4});
}

TEST_CASE("uniform stays in range") {
    Rng rng(9);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
    for (int i = 0; i < 1000; ++i) {
        const double u = rng.uniform(-3.0, 2.0);
        CHECK(u >= -3.0);
        CHECK(u < 2.0);
    }
}

TEST_CASE("bounded integers and permutations") {
    Rng rng(4242);
    std::vector<int> counts(7, 0);
    for (int i = 0; i < 7000; ++i) {
        const std::uint64_t x = rng.below(7);
        CHECK(x < 7);
        ++counts[x];
    }
    for (int c : counts) CHECK(c > 700);  // crude uniformity sanity

    for (std::size_t n : {0ul, 1ul, 2ul, 17ul, 100ul}) {
        auto p = rng.permutation(n);
        REQUIRE(p.size() == n);
        auto sorted = p;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < n; ++i) CHECK(sorted[i] == i);
    }
    // same seed, same permutation
    Rng r1(3), r2(3);
    CHECK(r1.permutation(50) == r2.permutation(50));
}

TEST_CASE("substreams are deterministic and distinct") {
    Rng a = Rng::substream(1000, 0);
    Rng b = Rng::substream(1000, 0);
    Rng c = Rng::substream(1000, 1);
    Rng d = Rng::substream(1001, 0);
    bool ab_same = true, ac_diff = false, ad_diff = false;
    for (int i = 0; i < 64; ++i) {
        const std::uint64_t av = a.next_u64();
        ab_same &= (av == b.next_u64());
        ac_diff |= (av != c.next_u64());
        ad_diff |= (av != d.next_u64());
    }
    CHECK(ab_same);
    CHECK(ac_diff);
    CHECK(ad_diff);
}
