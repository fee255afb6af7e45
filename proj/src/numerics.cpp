#include "sdsim/numerics.hpp"

#include <cmath>
#include <stdexcept>

namespace sds::numerics {

double pairwise_sum(std::span<const double> values) {
    if (values.size() <= 32) {
        double acc = 0.0;
        for (double v : values) acc += v;
        return acc;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double pairwise_mean(std::span<const double> values) {
    if (values.empty()) return 0.0;
    return pairwise_sum(values) / static_cast<double>(values.size());
}

double sample_stddev(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n < 2) return 0.0;
    const double mean = pairwise_mean(values);
    double acc = 0.0;
    for (double v : values) {
        const double d = v - mean;
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(n - 1));
}

LineFit fit_line(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size() || xs.size() < 2) {
        throw std::invalid_argument("fit_line: need two or more (x, y) pairs");
    }
    const auto n = static_cast<long double>(xs.size());
    long double sx = 0, sy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
    }
    const long double mx = sx / n;
    const long double my = sy / n;
    long double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const long double dx = xs[i] - mx;
        sxx += dx * dx;
        sxy += dx * (ys[i] - my);
    }
    if (sxx == 0) throw std::invalid_argument("fit_line: x values are all equal");
    LineFit fit;
    fit.slope = static_cast<double>(sxy / sxx);
    fit.intercept = static_cast<double>(my - (sxy / sxx) * mx);
    long double ss = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const long double r = ys[i] - (fit.slope * xs[i] + fit.intercept);
        ss += r * r;
    }
    fit.residual_rms = static_cast<double>(std::sqrt(static_cast<double>(ss / n)));
    if (xs.size() > 2) {
        const long double var = ss / (n - 2);
        fit.slope_stderr = static_cast<double>(std::sqrt(static_cast<double>(var / sxx)));
    }
    return fit;
}

double bisect_increasing(const std::function<double(double)>& f, double target,
                         double lo, double hi, double tol) {
    if (!(lo <= hi)) throw std::invalid_argument("bisect_increasing: empty bracket");
    double flo = f(lo);
    double fhi = f(hi);
    if (!(flo <= target && target <= fhi)) {
        throw std::invalid_argument("bisect_increasing: target not bracketed");
    }
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;  // bracket at floating point resolution
        if (f(mid) < target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

} // namespace sds::numerics
