#include "sdsim/model.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "sdsim/errors.hpp"
#include "sdsim/numerics.hpp"

namespace sds::model {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double l2_norm(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

double sq_frobenius(std::span<const double> a) {
    double s = 0.0;
    for (double v : a) s += v * v;
    return s;
}

double Envelope::inverse(double v) const {
    if (is_constant) return kInf;
    if (inv) return inv(v);
    const double at_one = phi(1.0);
    if (v < at_one) {
        std::ostringstream os;
        os << "envelope inverse undefined: value " << v << " is below phi(1) = "
           << at_one;
        throw ConfigError(os.str());
    }
    if (v == at_one) return 1.0;
    double hi = 2.0;
    while (phi(hi) < v) {
        hi *= 2.0;
        if (hi > 1e300) {
            throw NumericalError("envelope inverse: no bracket below 1e300");
        }
    }
    const double tol = 1e-12 * std::max(1.0, hi);
    return numerics::bisect_increasing([this](double u) { return phi(u); }, v,
                                       1.0, hi, tol);
}

Envelope Envelope::linear(double c) {
    Envelope e;
    e.phi = [c](double u) { return c * u; };
    e.inv = [c](double v) { return v / c; };
    return e;
}

Envelope Envelope::constant_bound(double c) {
    Envelope e;
    e.phi = [c](double) { return c; };
    e.is_constant = true;
    return e;
}

Envelope Envelope::quadratic(double c2, double c0) {
    Envelope e;
    e.phi = [c2, c0](double u) { return c2 * u * u + c0; };
    e.inv = [c2, c0](double v) { return std::sqrt((v - c0) / c2); };
    return e;
}

Envelope Envelope::from_function(std::function<double(double)> f) {
    Envelope e;
    e.phi = std::move(f);
    return e;
}

double StepControl::h(double delta) const {
    return coef * std::pow(delta, -exponent);
}

void StepControl::validate(double measure_floor) const {
    if (!(coef > 0.0)) throw ConfigError("step control: coefficient must be positive");
    if (!(exponent > 0.0)) {
        throw ConfigError("step control: exponent must be positive (h strictly decreasing)");
    }
    if (!(bound > 0.0)) throw ConfigError("step control: bound constant must be positive");
    switch (variant) {
        case Variant::plain:
            if (theta != 0.0) throw ConfigError("step control: plain variant requires theta = 0");
            break;
        case Variant::stability:
        case Variant::measure:
            if (!(theta > 0.0 && theta < 0.5)) {
                throw ConfigError("step control: theta must lie in (0, 1/2)");
            }
            break;
    }
    if (exponent > 0.5 - theta + 1e-15) {
        std::ostringstream os;
        os << "step control: exponent " << exponent << " exceeds 1/2 - theta = "
           << (0.5 - theta) << "; delta^(1/2-theta)*h(delta) is unbounded";
        throw ConfigError(os.str());
    }
    if (coef > bound * (1.0 + 1e-15)) {
        std::ostringstream os;
        os << "step control: h(1) = " << coef << " exceeds the bound constant "
           << bound;
        throw ConfigError(os.str());
    }
    if (variant == Variant::measure && coef < measure_floor) {
        std::ostringstream os;
        os << "step control: measure variant requires h(1) >= " << measure_floor
           << ", got " << coef;
        throw ConfigError(os.str());
    }
}

const EnvelopeSet& HybridModel::envelopes(EnvelopeKind kind) const {
    const auto& set = (kind == EnvelopeKind::growth) ? growth : lipschitz;
    if (!set) {
        throw ConfigError("model '" + name + "' has no " +
                          (kind == EnvelopeKind::growth ? std::string("growth")
                                                        : std::string("lipschitz")) +
                          " envelopes");
    }
    return *set;
}

const StepControl& HybridModel::control(EnvelopeKind kind) const {
    const auto& sc = (kind == EnvelopeKind::growth) ? control_growth : control_measure;
    if (!sc) {
        throw ConfigError("model '" + name + "' has no step control for the " +
                          (kind == EnvelopeKind::growth ? std::string("growth")
                                                        : std::string("measure")) +
                          " variant");
    }
    return *sc;
}

double truncation_radius(const Envelope& env, const StepControl& sc, int regime,
                         double delta) {
    if (env.is_constant) return kInf;
    const double v = sc.h(delta);
    const double at_one = env.value(1.0);
    if (v < at_one) {
        std::ostringstream os;
        os << "truncation radius undefined for regime " << (regime + 1)
           << " at delta = " << delta << ": h(delta) = " << v
           << " is below the envelope value phi(1) = " << at_one;
        throw ConfigError(os.str());
    }
    return env.inverse(v);
}

void clamp_to_ball(std::span<double> x, double r) {
    if (r == kInf) return;
    double nx = l2_norm(x);
    if (nx == 0.0) return;
    while (nx > r) {
        const double s = r / nx;
        for (double& v : x) v *= s;
        nx = l2_norm(x);
    }
}

std::vector<double> truncate(std::span<const double> x, int regime, double delta,
                             const EnvelopeSet& envs, const StepControl& sc) {
    if (!(delta > 0.0 && delta <= 1.0)) {
        throw ConfigError("truncate: delta must lie in (0, 1]");
    }
    const double r = truncation_radius(envs.per_regime.at(regime), sc, regime, delta);
    std::vector<double> out(x.begin(), x.end());
    clamp_to_ball(out, r);
    return out;
}

} // namespace sds::model
