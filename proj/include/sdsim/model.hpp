#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sdsim/markov.hpp"

namespace sds::model {

double l2_norm(std::span<const double> x);

/// Sum of squares of all entries (squared Frobenius norm for matrices
/// stored row-major, squared Euclidean norm for vectors).
double sq_frobenius(std::span<const double> a);

/// Coefficient bound for one regime: a strictly increasing function
/// phi: [1,inf) -> (0,inf), or a constant bound whose inverse is +infinity.
struct Envelope {
    std::function<double(double)> phi;
    std::function<double(double)> inv;  // empty: invert phi by bisection
    bool is_constant = false;

    double value(double u) const { return phi(u); }

    /// phi^{-1}(v) for v >= phi(1); +infinity for constant envelopes.
    /// Throws ConfigError when v < phi(1).
    double inverse(double v) const;

    static Envelope linear(double c);          // c*u
    static Envelope constant_bound(double c);  // c, inverse +infinity
    static Envelope quadratic(double c2, double c0);  // c2*u^2 + c0
    /// Arbitrary increasing function; inverse by expanding-bracket bisection
    /// with tolerance 1e-12 * max(1, u).
    static Envelope from_function(std::function<double(double)> f);
};

enum class EnvelopeKind { growth, lipschitz };

/// Per-regime envelopes of one kind. Growth envelopes bound
/// |f(x,i)|/(1+|x|) and |g(x,i)|^2/(1+|x|)^2 on balls |x| <= u;
/// Lipschitz envelopes bound the corresponding difference quotients.
struct EnvelopeSet {
    EnvelopeKind kind = EnvelopeKind::growth;
    std::vector<Envelope> per_regime;
};

/// Truncation-radius control h(delta) = coef * delta^(-exponent) on (0,1],
/// strictly decreasing, with delta^(1/2-theta) * h(delta) <= bound.
struct StepControl {
    enum class Variant { plain, stability, measure };

    Variant variant = Variant::plain;
    double coef = 1.0;
    double exponent = 0.5;
    double theta = 0.0;  // 0 for plain, in (0,1/2) otherwise
    double bound = 1.0;

    double h(double delta) const;

    /// Validates positivity, strict decrease, the exponent inequality and,
    /// for the measure variant, the floor h(1) >= measure_floor.
    void validate(double measure_floor = 0.0) const;
};

struct HybridModel {
    std::string name;
    int n = 0;  // state dimension
    int d = 0;  // Brownian dimension
    int m = 0;  // regime count
    markov::GeneratorMatrix generator;

    /// Fills out (size n) with f(x, regime). Regimes are 0-based internally.
    std::function<void(std::span<const double> x, int regime, std::span<double> out)> drift;
    /// Fills out (size n*d, row-major) with g(x, regime).
    std::function<void(std::span<const double> x, int regime, std::span<double> out)> diffusion;

    std::optional<EnvelopeSet> growth;
    std::optional<EnvelopeSet> lipschitz;
    std::optional<StepControl> control_growth;   // h, paired with growth
    std::optional<StepControl> control_measure;  // h-bar, paired with lipschitz

    const EnvelopeSet& envelopes(EnvelopeKind kind) const;
    const StepControl& control(EnvelopeKind kind) const;
};

/// Ball radius phi_i^{-1}(h(delta)) for the given regime; +infinity for
/// constant envelopes. Throws ConfigError naming the regime (1-based) and
/// delta when h(delta) < phi_i(1).
double truncation_radius(const Envelope& env, const StepControl& sc, int regime,
                         double delta);

/// Radial projection of x onto the closed ball of radius r (in place), with
/// the convention x/|x| = 0 at x = 0. Exactly idempotent: a second
/// application leaves the result bit-identical.
void clamp_to_ball(std::span<double> x, double r);

/// (|x| ^ R) * x/|x| with R = phi_i^{-1}(h(delta)).
std::vector<double> truncate(std::span<const double> x, int regime, double delta,
                             const EnvelopeSet& envs, const StepControl& sc);

/// Fits a strictly increasing piecewise-linear envelope dominating sampled
/// coefficient quotients on the node set {1} union grid, inflated by a 1.05
/// safety factor with a cumulative max and a minimal positive slope.
EnvelopeSet envelope_from_samples(const HybridModel& model, EnvelopeKind kind,
                                  std::span<const double> grid,
                                  std::uint64_t seed = 9001);

} // namespace sds::model
