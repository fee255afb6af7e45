#pragma once

#include <Eigen/Dense>
#include <vector>

#include "sdsim/rng.hpp"

namespace sds::markov {

/// Generator (rate matrix) of a continuous-time Markov chain on {0..m-1}.
/// Off-diagonal entries are nonnegative rates; every row sums to zero.
struct GeneratorMatrix {
    int m = 0;
    Eigen::MatrixXd gamma;

    GeneratorMatrix() = default;
    GeneratorMatrix(int states, Eigen::MatrixXd rates);

    /// Throws ConfigError if an off-diagonal entry is negative or a row sum
    /// deviates from zero beyond 1e-10 * scale.
    void validate() const;
};

/// One-step transition matrix P(delta) = exp(delta * gamma).
struct TransitionMatrix {
    int m = 0;
    double step = 0.0;
    Eigen::MatrixXd p;
};

struct StationaryDistribution {
    Eigen::VectorXd pi;
};

/// Eigenpair of the perturbed generator gamma + (p/2) diag(u):
/// eta is the negated maximal real part of its spectrum, xi the positive
/// eigenvector with min component 1.
struct SpectralResult {
    double p = 0.0;
    Eigen::VectorXd u;
    double eta = 0.0;
    Eigen::VectorXd xi;
};

/// Matrix exponential exp(delta * gamma) by scaling-and-squaring with the
/// diagonal Pade approximant of order 6. Entries are clamped to [0, 1] and
/// rows renormalized to sum exactly to 1.
TransitionMatrix transition_matrix(const GeneratorMatrix& gamma, double delta);

/// Simulate the embedded discrete chain: per step draw a uniform and scan the
/// cumulative transition row. Returns r_0..r_steps with r_0 = r0.
std::vector<int> sample_chain(const TransitionMatrix& p, int r0, int steps,
                              rng::Stream& stream);

/// Unique probability vector with pi * gamma = 0 (requires irreducibility).
StationaryDistribution stationary_distribution(const GeneratorMatrix& gamma);

/// True iff the directed graph of strictly positive off-diagonal rates is
/// strongly connected.
bool is_irreducible(const GeneratorMatrix& gamma);

/// gamma + (p/2) * diag(u).
Eigen::MatrixXd gamma_pu(const GeneratorMatrix& gamma, double p,
                         const Eigen::VectorXd& u);

/// Supremum of admissible moment orders: +infinity when max(u) <= 0,
/// otherwise the unique positive root of the spectral abscissa of
/// gamma + (p/2) diag(u), located by bisection. Callers must use
/// p strictly below the returned value.
double p_star(const GeneratorMatrix& gamma, const Eigen::VectorXd& u);

/// Dominant eigenpair of gamma + (p/2) diag(u) under the preconditions
/// pi*u < 0 and 0 < p < p_star. Throws ConfigError when a precondition
/// fails and NumericalError (reporting the spectrum) when the computed
/// eta is not positive despite them.
SpectralResult eta_xi(const GeneratorMatrix& gamma, double p,
                      const Eigen::VectorXd& u);

} // namespace sds::markov
