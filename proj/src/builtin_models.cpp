#include "sdsim/builtin_models.hpp"

#include <cmath>
#include <memory>

#include "sdsim/errors.hpp"

namespace sds::model {

namespace {

HybridModel scalar_cubic_model(std::string name, Eigen::MatrixXd rates,
                               std::vector<double> a, std::vector<double> b,
                               std::vector<double> sigma) {
    const int m = static_cast<int>(a.size());
    HybridModel model;
    model.name = std::move(name);
    model.n = 1;
    model.d = 1;
    model.m = m;
    model.generator = markov::GeneratorMatrix(m, std::move(rates));
    auto av = std::make_shared<std::vector<double>>(std::move(a));
    auto bv = std::make_shared<std::vector<double>>(std::move(b));
    auto sv = std::make_shared<std::vector<double>>(std::move(sigma));
    model.drift = [av, bv](std::span<const double> x, int r, std::span<double> out) {
        const double v = x[0];
        out[0] = (*av)[static_cast<std::size_t>(r)] * v +
                 (*bv)[static_cast<std::size_t>(r)] * v * v * v;
    };
    model.diffusion = [sv](std::span<const double> x, int r, std::span<double> out) {
        out[0] = (*sv)[static_cast<std::size_t>(r)] * x[0];
    };
    return model;
}

} // namespace

Preset make_volatility31() {
    Preset p;
    HybridModel& model = p.model;
    model.name = "volatility31";
    model.n = 2;
    model.d = 2;
    model.m = 2;
    Eigen::MatrixXd rates(2, 2);
    rates << -4.0, 4.0, 0.2, -0.2;
    model.generator = markov::GeneratorMatrix(2, rates);

    const double rt2 = std::sqrt(2.0);
    model.drift = [](std::span<const double> x, int r, std::span<double> out) {
        if (r == 0) {
            const double nx = std::sqrt(x[0] * x[0] + x[1] * x[1]);
            const double c = 2.5 * (1.0 - nx);
            out[0] = c * x[0];
            out[1] = c * x[1];
        } else {
            out[0] = 1.0 - x[0];
            out[1] = 2.0 - x[1];
        }
    };
    model.diffusion = [rt2](std::span<const double> x, int r, std::span<double> out) {
        const double nx = std::sqrt(x[0] * x[0] + x[1] * x[1]);
        if (r == 0) {
            const double s = nx * std::sqrt(nx);  // |x|^(3/2)
            out[0] = -s;
            out[1] = rt2 * s;
            out[2] = rt2 * s;
            out[3] = s;
        } else {
            out[0] = 0.2 * nx;
            out[1] = -0.5 * nx;
            out[2] = nx;
            out[3] = 0.4 * nx;
        }
    };

    EnvelopeSet growth;
    growth.kind = EnvelopeKind::growth;
    growth.per_regime.push_back(Envelope::linear(6.0));
    growth.per_regime.push_back(Envelope::constant_bound(std::sqrt(10.0)));
    model.growth = std::move(growth);

    EnvelopeSet lip;
    lip.kind = EnvelopeKind::lipschitz;
    lip.per_regime.push_back(Envelope::linear(18.0));
    lip.per_regime.push_back(Envelope::constant_bound(1.45));
    model.lipschitz = std::move(lip);

    StepControl hg;
    hg.variant = StepControl::Variant::plain;
    hg.coef = 18.0;
    hg.exponent = 0.5;
    hg.theta = 0.0;
    hg.bound = 18.0;
    model.control_growth = hg;

    StepControl hm;
    hm.variant = StepControl::Variant::measure;
    hm.coef = 54.0;
    hm.exponent = 0.4;
    hm.theta = 0.1;
    hm.bound = 54.0;
    model.control_measure = hm;

    p.x0 = Eigen::Vector2d(1.0, 1.0);
    p.r0 = 1;
    p.horizon_convergence = 10.0;
    p.horizon_invariant = 100.0;
    p.error_power = 1;
    p.q_matrices = {Eigen::MatrixXd::Identity(2, 2)};
    p.p_bar = 5.0 / 3.0;
    p.rho = 0.8;
    p.alpha_declared = {5.0, -0.64};
    p.beta_declared = {5.0, -0.898};
    return p;
}

Preset make_ginzburg32() {
    Preset p;
    Eigen::MatrixXd rates(2, 2);
    rates << -1.0, 1.0, 4.0, -4.0;
    p.model = scalar_cubic_model("ginzburg32", rates, {1.0, 0.5}, {-1.0, -1.0},
                                 {2.0, 1.0});
    HybridModel& model = p.model;

    EnvelopeSet growth;
    growth.kind = EnvelopeKind::growth;
    growth.per_regime.push_back(Envelope::quadratic(4.0, 4.0));  // 4(u^2+1)
    growth.per_regime.push_back(Envelope::quadratic(4.0, 4.0));
    model.growth = std::move(growth);

    EnvelopeSet lip;
    lip.kind = EnvelopeKind::lipschitz;
    lip.per_regime.push_back(Envelope::quadratic(3.0, 1.0));  // 3u^2+1
    lip.per_regime.push_back(Envelope::quadratic(3.0, 0.5));  // 3u^2+0.5
    model.lipschitz = std::move(lip);

    StepControl hg;
    hg.variant = StepControl::Variant::plain;
    hg.coef = 1604.0;  // phi(|x0| v 1) = 4*(20^2+1)
    hg.exponent = 0.2;
    hg.theta = 0.0;
    hg.bound = 1604.0;
    model.control_growth = hg;

    StepControl hm;
    hm.variant = StepControl::Variant::measure;
    hm.coef = 1201.0;  // phibar_1(20) = 3*400+1
    hm.exponent = 0.4;
    hm.theta = 0.1;
    hm.bound = 1201.0;
    model.control_measure = hm;

    p.x0 = Eigen::VectorXd::Constant(1, 20.0);
    p.r0 = 0;
    p.horizon_convergence = 2.0;
    p.horizon_invariant = 100.0;
    p.error_power = 2;
    p.q_matrices = {Eigen::MatrixXd::Identity(1, 1)};
    p.p_bar = 1.0;
    p.rho = 0.5;
    p.scalar_cubic = true;
    p.a = {1.0, 0.5};
    p.b = {-1.0, -1.0};
    p.sigma = {2.0, 1.0};
    return p;
}

Preset make_ginzburg53(double gamma) {
    if (!(gamma > 0.0)) throw ConfigError("ginzburg53: gamma must be positive");
    Preset p;
    Eigen::MatrixXd rates(2, 2);
    rates << -gamma, gamma, 3.0, -3.0;
    p.model = scalar_cubic_model("ginzburg53", rates, {1.0, 2.0}, {-1.0, 0.0},
                                 {2.0, -1.0});
    HybridModel& model = p.model;

    EnvelopeSet growth;
    growth.kind = EnvelopeKind::growth;
    growth.per_regime.push_back(Envelope::quadratic(4.0, 4.0));  // 4(u^2+1)
    growth.per_regime.push_back(Envelope::constant_bound(2.0));
    model.growth = std::move(growth);

    EnvelopeSet lip;
    lip.kind = EnvelopeKind::lipschitz;
    lip.per_regime.push_back(Envelope::quadratic(3.0, 1.0));  // 3u^2+1
    lip.per_regime.push_back(Envelope::constant_bound(2.0));
    model.lipschitz = std::move(lip);

    StepControl hg;
    hg.variant = StepControl::Variant::plain;
    hg.coef = 8.0;  // phi_1(1) = 8
    hg.exponent = 0.5;
    hg.theta = 0.0;
    hg.bound = 8.0;
    model.control_growth = hg;

    StepControl hm;
    hm.variant = StepControl::Variant::measure;
    hm.coef = 6.0;  // >= phibar_1(|x0| v 1) = 4 and >= the zero-state floor
    hm.exponent = 0.4;
    hm.theta = 0.1;
    hm.bound = 6.0;
    model.control_measure = hm;

    p.x0 = Eigen::VectorXd::Constant(1, 0.5);
    p.r0 = 1;
    p.horizon_convergence = 2.0;
    p.horizon_invariant = 100.0;
    p.error_power = 2;
    p.q_matrices = {Eigen::MatrixXd::Identity(1, 1)};
    p.p_bar = 1.0;
    p.rho = 0.1;
    p.beta_declared = {-1.6, 3.1};
    p.scalar_cubic = true;
    p.a = {1.0, 2.0};
    p.b = {-1.0, 0.0};
    p.sigma = {2.0, -1.0};
    return p;
}

std::vector<std::string> builtin_names() {
    return {"volatility31", "ginzburg32", "ginzburg53"};
}

Preset make_builtin(const std::string& name, double gamma) {
    if (name == "volatility31") return make_volatility31();
    if (name == "ginzburg32") return make_ginzburg32();
    if (name == "ginzburg53") return make_ginzburg53(gamma);
    throw ConfigError("unknown model '" + name +
                      "'; built-ins are volatility31, ginzburg32, ginzburg53");
}

} // namespace sds::model
