#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "sdsim/rng.hpp"

using sds::rng::Stream;

TEST_CASE("same seed reproduces the same sequence") {
    Stream a(42), b(42);
    for (int i = 0; i < 1000; ++i) {
        CHECK(a.next_u64() == b.next_u64());
    }
}

TEST_CASE("derived streams depend on every index") {
    Stream a = Stream::derive(7, {1, 2});
    Stream b = Stream::derive(7, {1, 3});
    Stream c = Stream::derive(7, {2, 2});
    Stream d = Stream::derive(8, {1, 2});
    Stream a2 = Stream::derive(7, {1, 2});
    const auto va = a.next_u64();
    CHECK(va == a2.next_u64());
    CHECK(va != b.next_u64());
    CHECK(va != c.next_u64());
    CHECK(va != d.next_u64());
}

TEST_CASE("uniform draws lie strictly inside (0,1) and look uniform") {
    Stream s(1234);
    const int n = 200000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = s.uniform();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    // mean of Uniform(0,1) is 1/2 with stderr 1/sqrt(12 n) ~ 6.5e-4
    CHECK(std::abs(sum / n - 0.5) < 4e-3);
}

TEST_CASE("normal draws match the first two moments") {
    Stream s(99);
    const int n = 200000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = s.normal();
        sum += z;
        sumsq += z * z;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    CHECK(std::abs(mean) < 0.01);        // stderr 1/sqrt(n) ~ 2.2e-3
    CHECK(std::abs(var - 1.0) < 0.02);   // stderr sqrt(2/n) ~ 3.2e-3
}

TEST_CASE("normal tail frequencies are sane") {
    Stream s(2024);
    const int n = 100000;
    int beyond2 = 0;
    for (int i = 0; i < n; ++i) {
        if (std::abs(s.normal()) > 2.0) ++beyond2;
    }
    // P(|Z|>2) = 0.0455
    CHECK(beyond2 > 3800);
    CHECK(beyond2 < 5300);
}
