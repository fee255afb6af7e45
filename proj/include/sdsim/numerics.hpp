#pragma once

#include <functional>
#include <span>

namespace sds::numerics {

/// Pairwise summation in a fixed order; deterministic for a given input
/// sequence regardless of how the values were produced.
double pairwise_sum(std::span<const double> values);

/// Mean via pairwise summation. Empty input returns 0.
double pairwise_mean(std::span<const double> values);

/// Sample standard deviation (unbiased, n-1). Returns 0 for n < 2.
double sample_stddev(std::span<const double> values);

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual_rms = 0.0;  // root mean square of fit residuals
    double slope_stderr = 0.0;  // OLS standard error of the slope
};

/// Ordinary least squares fit y = slope*x + intercept.
/// Requires xs.size() == ys.size() >= 2.
LineFit fit_line(std::span<const double> xs, std::span<const double> ys);

/// Root of a strictly increasing continuous function by bisection.
/// Brackets [lo, hi] must satisfy f(lo) <= target <= f(hi).
/// Stops when the bracket width falls below tol.
double bisect_increasing(const std::function<double(double)>& f, double target,
                         double lo, double hi, double tol);

} // namespace sds::numerics
