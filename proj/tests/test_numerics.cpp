#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "sdsim/numerics.hpp"

using namespace sds::numerics;

TEST_CASE("pairwise sum matches exact sums") {
    std::vector<double> v(1000);
    for (int i = 0; i < 1000; ++i) v[static_cast<std::size_t>(i)] = i + 1;
    CHECK(pairwise_sum(v) == doctest::Approx(500500.0).epsilon(1e-15));
    CHECK(pairwise_mean(v) == doctest::Approx(500.5).epsilon(1e-15));
}

TEST_CASE("pairwise sum is a fixed-order reduction") {
    std::vector<double> v;
    for (int i = 0; i < 12345; ++i) {
        v.push_back(std::sin(0.1 * i) * std::exp(std::cos(i)));
    }
    const double once = pairwise_sum(v);
    CHECK(pairwise_sum(v) == once);
}

TEST_CASE("sample stddev of a known set") {
    std::vector<double> v{2, 4, 4, 4, 5, 5, 7, 9};
    // mean 5, sum of squared deviations 32, unbiased variance 32/7
    CHECK(sample_stddev(v) == doctest::Approx(std::sqrt(32.0 / 7.0)).epsilon(1e-14));
}

TEST_CASE("line fit recovers exact linear data") {
    std::vector<double> xs, ys;
    for (int i = 0; i < 20; ++i) {
        xs.push_back(0.3 * i - 2.0);
        ys.push_back(0.5 * xs.back() + 1.25);
    }
    const LineFit fit = fit_line(xs, ys);
    CHECK(fit.slope == doctest::Approx(0.5).epsilon(1e-13));
    CHECK(fit.intercept == doctest::Approx(1.25).epsilon(1e-13));
    CHECK(fit.residual_rms < 1e-12);
}

TEST_CASE("bisection inverts a strictly increasing function") {
    auto f = [](double x) { return x * x * x + x; };
    const double root = bisect_increasing(f, 10.0, 0.0, 10.0, 1e-13);
    CHECK(f(root) == doctest::Approx(10.0).epsilon(1e-10));
}

TEST_CASE("bisection rejects an unbracketed target") {
    auto f = [](double x) { return x; };
    CHECK_THROWS(bisect_increasing(f, 5.0, 0.0, 1.0, 1e-12));
}
