#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sdsim/model.hpp"
#include "sdsim/schemes.hpp"

namespace sds::measure {

/// Weighted point cloud on R^n x {regimes}. Weights are nonnegative and sum
/// to 1 (uniform by default).
struct EmpiricalMeasure {
    int n = 0;
    std::vector<double> xs;       // count * n, row-major
    std::vector<int> regimes;     // count
    std::vector<double> weights;  // count

    long count() const { return static_cast<long>(regimes.size()); }
    std::span<const double> point(long i) const {
        return {xs.data() + static_cast<std::size_t>(i) * n, static_cast<std::size_t>(n)};
    }
    void validate() const;

    static EmpiricalMeasure uniform(int n, std::vector<double> xs, std::vector<int> regimes);
};

/// One coordinate of every sample point, for per-component tests.
std::vector<double> component(const EmpiricalMeasure& mu, int axis);

/// Right-continuous empirical CDF: F(t) = fraction of samples <= t.
struct Ecdf {
    std::vector<double> sorted;
    double operator()(double t) const;
};
Ecdf ecdf(std::span<const double> values);

struct KsResult {
    double statistic = 0.0;  // sup_t |F1(t) - F2(t)|, exact over the merged sample
    long n = 0, m = 0;
    double alpha = 0.0;
    double critical = 0.0;  // c(alpha) * sqrt((n+m)/(n*m)), c = sqrt(-ln(alpha/2)/2)
    bool reject = false;
};
KsResult ks_two_sample(std::span<const double> s1, std::span<const double> s2, double alpha);

struct WassersteinResult {
    double distance = 0.0;          // exact optimal-transport cost
    double comonotone_bound = 0.0;  // lexicographic-pairing upper bound
    long support = 0;               // common support size actually solved
};

/// Exact transport distance between two uniform empirical measures under the
/// cost |x-y|^p + 1{i != j}, p in (0,1], solved as a minimal assignment.
/// Unequal supports are thinned to the smaller size by an evenly spaced
/// deterministic stride. Support sizes beyond 2000 are refused: subsample
/// first.
WassersteinResult wasserstein_p(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                double p);

struct InvariantOptions {
    enum class Mode { across_paths, along_path };
    Mode mode = Mode::across_paths;
    double burn_in = -1.0;  // along-path: discard t < burn_in; < 0 means horizon/2
    long samples = 500;
    long thinning = 10;  // along-path: collection stride in steps
};

/// Long-run sampler for the chain's invariant law. across_paths runs
/// `samples` independent chains and keeps each terminal pair (Y(T), r(T));
/// along_path runs one chain and collects every `thinning`-th state after
/// the burn-in. Requires the measure-variant scheme.
EmpiricalMeasure invariant_sample(const model::HybridModel& model,
                                  const scheme::SchemeConfig& config,
                                  const InvariantOptions& options, std::uint64_t seed,
                                  int workers = 1);

struct DensityGrid {
    double x_lo = 0.0, x_hi = 0.0, y_lo = 0.0, y_hi = 0.0;
    int bins_x = 0, bins_y = 0;
    std::vector<double> density;  // bins_x * bins_y, row-major in x

    double at(int ix, int iy) const {
        return density[static_cast<std::size_t>(ix) * bins_y + iy];
    }
};

/// Normalized 2-D histogram of the x-marginal: the density integrates to 1
/// over the grid. Samples outside the bounds are dropped before normalizing.
DensityGrid density_grid(const EmpiricalMeasure& mu, double x_lo, double x_hi, double y_lo,
                         double y_hi, int bins_x, int bins_y);

} // namespace sds::measure
