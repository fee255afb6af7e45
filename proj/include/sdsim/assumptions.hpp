#pragma once

#include <Eigen/Dense>
#include <limits>
#include <span>
#include <vector>

#include "sdsim/model.hpp"

namespace sds::model {

/// Structural conditions checked by sampling. The checkers are falsifiers,
/// not provers: they evaluate the defining quotient on sampled states and
/// report the largest value seen.
enum class ConditionId {
    moment_bound,  // (1+x'Qx)*psi - (2-p)|x'Qg|^2 <= alpha_i (x'Qx)^2 for large x
    contraction,   // |x-y|^2*psi - (2-rho)|(x-y)'G|^2 <= beta_i |x-y|^4
    pair_growth,   // user-declared metadata only; never fitted
};

struct AssumptionReport {
    ConditionId id = ConditionId::moment_bound;
    double order = 0.0;  // p-bar for moment_bound, rho for contraction
    /// Largest observed quotient per regime. For moment_bound the fit uses
    /// the outermost sampled decade (the condition is asymptotic in |x|).
    std::vector<double> fitted;
    std::vector<double> declared;  // empty when none supplied
    /// min over regimes of declared_i - observed_i; NaN without declared
    /// values. margin >= 0 means the declared constants are not refuted on
    /// the samples drawn.
    double margin = std::numeric_limits<double>::quiet_NaN();
    long samples = 0;
    bool has_stationary = false;
    bool shared_q = true;  // moment_bound: whether all regimes use one Q
    /// pi-weighted sum of the declared constants when given, else of the
    /// fitted ones; NaN when the generator is reducible.
    double pi_dot = std::numeric_limits<double>::quiet_NaN();
};

/// Samples the moment-bound quotient on shells |x| in [10, 1e4]. q holds one
/// shared matrix or one per regime; each must be symmetric positive-definite.
AssumptionReport check_moment_condition(const HybridModel& model,
                                        const std::vector<Eigen::MatrixXd>& q,
                                        double p_bar, long budget,
                                        std::span<const double> declared = {},
                                        std::uint64_t seed = 7001);

/// Samples the pairwise contraction quotient over pairs (x, y), including
/// colinear and near-coincident pairs where the supremum is often attained.
AssumptionReport check_contraction_condition(const HybridModel& model, double rho,
                                             long budget,
                                             std::span<const double> declared = {},
                                             std::uint64_t seed = 7002);

} // namespace sds::model
