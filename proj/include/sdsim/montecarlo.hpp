#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sdsim/model.hpp"
#include "sdsim/schemes.hpp"

namespace sds::mc {

/// Runs body(j) for j in [0, count) on the given number of worker threads.
/// Each invocation must write only to its own per-index slot; under that
/// contract results are bit-identical for any worker count. The first
/// exception thrown by a body is rethrown after all threads join.
void parallel_paths(long count, int workers, const std::function<void(long)>& body);

/// Reference solution used by strong_error: either the pathwise closed form
/// of the scalar cubic model, or the same scheme on a finer grid sharing the
/// coarse scheme's randomness.
struct Reference {
    enum class Kind { closed_form, fine_step };
    Kind kind = Kind::closed_form;
    double delta_ref = 0.0;

    static Reference closed_form() { return {Kind::closed_form, 0.0}; }
    static Reference fine_step(double delta_ref) { return {Kind::fine_step, delta_ref}; }
};

struct ErrorRow {
    double delta = 0.0;
    double error = 0.0;      // (mean |X(T)-Y(T)|^q)^(1/q) over surviving pairs
    double std_error = 0.0;  // delta-method standard error of that estimate
    long paths = 0;          // surviving pairs averaged
    long diverged = 0;       // pairs dropped because the test path diverged
};

struct ErrorTable {
    int q = 2;
    long requested_paths = 0;
    long reference_diverged = 0;  // reference paths dropped from every row
    std::vector<ErrorRow> rows;
};

/// Paired strong-error estimate at each delta. With a fine-step reference
/// each path draws one fine chain and one fine increment array; every coarse
/// grid consumes the block sums of those increments and the fine chain
/// subsampled at its own grid points. With the closed-form reference each
/// (delta, path) pair shares one chain and one increment array between the
/// scheme and the closed form. Divergent test paths are excluded from the
/// average and counted per row.
ErrorTable strong_error(const model::HybridModel& model, const scheme::SchemeConfig& config,
                        const Reference& reference, std::span<const double> deltas, int q,
                        long paths, std::uint64_t seed, int workers = 1);

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual_rms = 0.0;
    int used_rows = 0;
    std::vector<std::string> warnings;  // rows excluded from the fit
};

/// Least-squares fit of log(error) against log(delta). Rows with zero or
/// non-finite error are excluded with a warning; at least 3 usable rows are
/// required.
RateFit fit_rate(const ErrorTable& table);

struct MomentTrace {
    double p = 1.0;
    std::vector<double> times;    // requested times snapped to the step grid
    std::vector<double> moments;  // E|Y|^p estimates over surviving paths
    long paths = 0;               // surviving paths averaged
    long diverged = 0;
    std::vector<std::vector<double>> per_path;  // survivors x times, |Y|^p
};

/// Monte Carlo estimates of E|Y(t)|^p at the requested times.
MomentTrace moment_trace(const model::HybridModel& model, const scheme::SchemeConfig& config,
                         double p, long paths, std::span<const double> sample_times,
                         std::uint64_t seed, int workers = 1);

struct SlopeEstimate {
    double slope = 0.0;
    double std_error = 0.0;  // spread of per-path slopes / sqrt(paths)
    long paths = 0;
};

/// Mean of the per-path least-squares slopes of |Y(t)|^p over the time
/// window [t0, t1]; its standard error measures whether the trace trends.
SlopeEstimate trace_slope(const MomentTrace& trace, double t0, double t1);

struct LyapunovResult {
    std::vector<double> per_path;  // log|Y(T)| / T per surviving nonzero path
    double mean = 0.0;
    double std_error = 0.0;
    long zero_paths = 0;  // terminal state exactly 0, excluded
    long diverged = 0;
    bool degenerate = false;  // x0 = 0: the trajectory is identically 0
};

/// Pathwise exponential-decay estimates log|Y(T)|/T. Requires a zero
/// equilibrium (f(0,i) = 0 and g(0,i) = 0 in every regime).
LyapunovResult lyapunov_estimate(const model::HybridModel& model,
                                 const scheme::SchemeConfig& config, long paths,
                                 std::uint64_t seed, int workers = 1);

} // namespace sds::mc
