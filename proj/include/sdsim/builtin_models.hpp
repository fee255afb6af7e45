#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "sdsim/model.hpp"

namespace sds::model {

/// A built-in model plus the experiment defaults and checker metadata that
/// the command-line frontend uses.
struct Preset {
    HybridModel model;

    Eigen::VectorXd x0;
    int r0 = 0;  // 0-based initial regime

    double horizon_convergence = 1.0;
    double horizon_invariant = 100.0;
    int error_power = 2;  // q: 1 = mean absolute error, 2 = RMS

    // moment/contraction checker metadata
    std::vector<Eigen::MatrixXd> q_matrices;
    double p_bar = 0.0;
    double rho = 0.0;
    std::vector<double> alpha_declared;
    std::vector<double> beta_declared;

    // scalar models with drift a*x + b*x^3 and diffusion sigma*x, enabling
    // the implicit cubic stepper and the closed-form reference
    bool scalar_cubic = false;
    std::vector<double> a, b, sigma;
};

/// Registry of the built-in models. Exactly these three names.
std::vector<std::string> builtin_names();

/// volatility31: 2-D two-regime model mixing a superlinear mean-repelling
/// regime with a mean-reverting one. ginzburg32 / ginzburg53: scalar
/// Ginzburg-Landau type cubic models; gamma sets ginzburg53's rate out of
/// regime 1. Throws ConfigError for unknown names.
Preset make_builtin(const std::string& name, double gamma = 1.5);

Preset make_volatility31();
Preset make_ginzburg32();
Preset make_ginzburg53(double gamma = 1.5);

} // namespace sds::model
