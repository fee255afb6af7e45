#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <vector>

#include "sdsim/markov.hpp"
#include "sdsim/model.hpp"
#include "sdsim/rng.hpp"

namespace sds::scheme {

enum class Variant {
    truncated_finite,   // growth envelopes, control h
    truncated_measure,  // difference-quotient envelopes, control h-bar
    plain_em,           // no truncation
    backward_em_cubic,  // implicit step for scalar a*x + b*x^3 drift, b < 0
};

struct SchemeConfig {
    Variant variant = Variant::truncated_finite;
    double delta = 0.0;
    double horizon = 0.0;
    Eigen::VectorXd x0;
    int r0 = 0;  // 0-based

    // per-regime coefficients for backward_em_cubic and the closed form
    std::vector<double> cubic_a, cubic_b, cubic_sigma;

    long steps() const;
};

/// Fully validated stepping plan: per-regime truncation radii at this delta
/// (+infinity where no truncation applies) and the one-step chain matrix.
struct Plan {
    SchemeConfig config;
    long steps = 0;
    std::vector<double> radii;
    markov::TransitionMatrix chain;
};

/// Validates config against the model (dimensions, step-control inequalities,
/// variant requirements, x0 not truncated at step 0) and precomputes radii.
Plan prepare(const model::HybridModel& model, const SchemeConfig& config);

struct PathSample {
    double delta = 0.0;
    std::vector<double> times;    // steps+1
    std::vector<int> regimes;     // steps+1
    std::vector<double> y;        // (steps+1) * n, row-major, truncated states
    std::vector<double> y_tilde;  // (steps+1) * n, pre-truncation states
    std::vector<double> db;       // steps * d
    long diverged_at = -1;        // first step with a non-finite state, -1 = none

    bool ok() const { return diverged_at < 0; }
};

struct PathResult {
    Eigen::VectorXd terminal;
    int terminal_regime = 0;
    long diverged_at = -1;

    bool ok() const { return diverged_at < 0; }
};

/// Called after each step with the new state; k runs from 1 to steps.
using StepObserver = std::function<void(long k, double t, int regime,
                                        std::span<const double> y)>;

/// Draw order per path: the whole regime path first (one uniform per step),
/// then all Brownian increments (d normals per step). Identical
/// (model, config, stream state) gives bit-identical output.
PathSample simulate(const model::HybridModel& model, const SchemeConfig& config,
                    rng::Stream& stream);

/// Streaming variant of simulate: no trajectory storage.
PathResult run_path(const model::HybridModel& model, const SchemeConfig& config,
                    rng::Stream& stream, const StepObserver* observer = nullptr);

/// Steps over caller-supplied inputs: regimes has steps+1 entries, db has
/// steps*d entries scaled to variance delta. Used for paired couplings.
PathResult run_path_given(const model::HybridModel& model, const SchemeConfig& config,
                          std::span<const int> regimes, std::span<const double> db,
                          const StepObserver* observer = nullptr);

/// One explicit truncated step: y_tilde' = y + f(y,r)delta + g(y,r) db, then
/// y' clamps y_tilde' with the radius of regime r_next. Throws NumericalError
/// naming (y, r) when the model output is non-finite.
std::pair<Eigen::VectorXd, Eigen::VectorXd> step_truncated(
    const Eigen::VectorXd& y, int r, int r_next, const Eigen::VectorXd& db,
    const model::HybridModel& model, const Plan& plan);

/// Implicit step for dx = (a x + b x^3) dt + sigma x dB via the real Cardano
/// root of y' - (a y' + b y'^3) delta = y (1 + sigma db). Requires b < 0 and
/// delta < 1/a when a > 0.
double step_backward_cubic(double y, int r, double db, std::span<const double> a,
                           std::span<const double> b, std::span<const double> sigma,
                           double delta);

/// Pathwise closed-form solution of the cubic model driven by the same chain
/// and increments, with time integrals discretized by left-endpoint sums.
/// Requires x0 > 0 and b_i <= 0; returns steps+1 values.
std::vector<double> exact_ginzburg_landau(std::span<const int> chain,
                                          std::span<const double> db,
                                          std::span<const double> a,
                                          std::span<const double> b,
                                          std::span<const double> sigma, double x0,
                                          double delta);

} // namespace sds::scheme
