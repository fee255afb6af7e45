#include "sdsim/schemes.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "sdsim/errors.hpp"

namespace sds::scheme {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool all_finite(std::span<const double> v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

double measure_floor(const model::HybridModel& m) {
    std::vector<double> zero(m.n, 0.0), f(m.n);
    std::vector<double> g(static_cast<std::size_t>(m.n) * m.d);
    double floor = 0.0;
    for (int i = 0; i < m.m; ++i) {
        m.drift(zero, i, f);
        m.diffusion(zero, i, g);
        floor = std::max(floor, model::l2_norm(f));
        floor = std::max(floor, model::sq_frobenius(g));
    }
    return floor;
}

/// Shared explicit-step loop over supplied regimes/increments. y enters as
/// x0 and leaves as the terminal (last finite truncated) state. on_step is
/// called as on_step(k, y_tilde, y, regime_k) for k = 1..steps.
template <typename OnStep>
long explicit_loop(const model::HybridModel& m, const Plan& plan,
                   std::span<const int> regimes, std::span<const double> db,
                   std::span<double> y, OnStep&& on_step) {
    const int n = m.n, d = m.d;
    const double delta = plan.config.delta;
    std::vector<double> f(n), g(static_cast<std::size_t>(n) * d), ytilde(n);
    for (long k = 0; k < plan.steps; ++k) {
        const int r = regimes[static_cast<std::size_t>(k)];
        const int r_next = regimes[static_cast<std::size_t>(k) + 1];
        m.drift(y, r, f);
        m.diffusion(y, r, g);
        const double* dbk = db.data() + static_cast<std::size_t>(k) * d;
        for (int i = 0; i < n; ++i) {
            double acc = y[i] + f[i] * delta;
            const double* gi = g.data() + static_cast<std::size_t>(i) * d;
            for (int l = 0; l < d; ++l) acc += gi[l] * dbk[l];
            ytilde[i] = acc;
        }
        if (!all_finite(ytilde)) return k + 1;
        for (int i = 0; i < n; ++i) y[i] = ytilde[i];
        model::clamp_to_ball(y, plan.radii[static_cast<std::size_t>(r_next)]);
        on_step(k + 1, std::span<const double>(ytilde), std::span<const double>(y.data(), y.size()),
                r_next);
    }
    return -1;
}

template <typename OnStep>
long cubic_loop(const model::HybridModel&, const Plan& plan,
                std::span<const int> regimes, std::span<const double> db,
                std::span<double> y, OnStep&& on_step) {
    const SchemeConfig& c = plan.config;
    for (long k = 0; k < plan.steps; ++k) {
        const int r = regimes[static_cast<std::size_t>(k)];
        const double next =
            step_backward_cubic(y[0], r, db[static_cast<std::size_t>(k)], c.cubic_a,
                                c.cubic_b, c.cubic_sigma, c.delta);
        if (!std::isfinite(next)) return k + 1;
        y[0] = next;
        const std::span<const double> ys(y.data(), y.size());
        on_step(k + 1, ys, ys, regimes[static_cast<std::size_t>(k) + 1]);
    }
    return -1;
}

template <typename OnStep>
long dispatch_loop(const model::HybridModel& m, const Plan& plan,
                   std::span<const int> regimes, std::span<const double> db,
                   std::span<double> y, OnStep&& on_step) {
    if (plan.config.variant == Variant::backward_em_cubic) {
        return cubic_loop(m, plan, regimes, db, y, on_step);
    }
    return explicit_loop(m, plan, regimes, db, y, on_step);
}

void draw_inputs(const model::HybridModel& m, const Plan& plan, rng::Stream& stream,
                 std::vector<int>& regimes, std::vector<double>& db) {
    regimes = markov::sample_chain(plan.chain, plan.config.r0, plan.steps, stream);
    db.resize(static_cast<std::size_t>(plan.steps) * m.d);
    const double scale = std::sqrt(plan.config.delta);
    for (double& v : db) v = scale * stream.normal();
}

} // namespace

long SchemeConfig::steps() const {
    return static_cast<long>(std::floor(horizon / delta + 1e-9));
}

Plan prepare(const model::HybridModel& m, const SchemeConfig& config) {
    if (m.n <= 0 || m.d <= 0 || m.m <= 0) throw ConfigError("model has empty dimensions");
    if (!(config.delta > 0.0 && config.delta <= 1.0)) {
        throw ConfigError("scheme: delta must lie in (0, 1]");
    }
    if (!(config.horizon >= config.delta)) {
        throw ConfigError("scheme: horizon must satisfy T/delta >= 1");
    }
    if (config.x0.size() != m.n) {
        throw ConfigError("scheme: x0 dimension does not match the model");
    }
    if (config.r0 < 0 || config.r0 >= m.m) {
        throw ConfigError("scheme: initial regime out of range");
    }

    Plan plan;
    plan.config = config;
    plan.steps = config.steps();
    plan.radii.assign(static_cast<std::size_t>(m.m), kInf);

    switch (config.variant) {
        case Variant::truncated_finite: {
            const auto& envs = m.envelopes(model::EnvelopeKind::growth);
            const auto& sc = m.control(model::EnvelopeKind::growth);
            sc.validate();
            for (int i = 0; i < m.m; ++i) {
                plan.radii[static_cast<std::size_t>(i)] =
                    model::truncation_radius(envs.per_regime[static_cast<std::size_t>(i)],
                                             sc, i, config.delta);
            }
            break;
        }
        case Variant::truncated_measure: {
            const auto& envs = m.envelopes(model::EnvelopeKind::lipschitz);
            const auto& sc = m.control(model::EnvelopeKind::lipschitz);
            sc.validate(measure_floor(m));
            for (int i = 0; i < m.m; ++i) {
                plan.radii[static_cast<std::size_t>(i)] =
                    model::truncation_radius(envs.per_regime[static_cast<std::size_t>(i)],
                                             sc, i, config.delta);
            }
            break;
        }
        case Variant::plain_em:
            break;
        case Variant::backward_em_cubic: {
            if (m.n != 1 || m.d != 1) {
                throw ConfigError("backward-em-cubic requires a scalar model (n = d = 1)");
            }
            const std::size_t mm = static_cast<std::size_t>(m.m);
            if (config.cubic_a.size() != mm || config.cubic_b.size() != mm ||
                config.cubic_sigma.size() != mm) {
                throw ConfigError("backward-em-cubic requires per-regime cubic coefficients");
            }
            for (int i = 0; i < m.m; ++i) {
                if (!(config.cubic_b[static_cast<std::size_t>(i)] < 0.0)) {
                    throw ConfigError("backward-em-cubic requires b < 0 in every regime");
                }
                const double a = config.cubic_a[static_cast<std::size_t>(i)];
                if (a > 0.0 && !(config.delta < 1.0 / a)) {
                    throw ConfigError("backward-em-cubic requires delta < 1/a");
                }
            }
            break;
        }
    }

    const double nx0 = model::l2_norm(
        std::span<const double>(config.x0.data(), static_cast<std::size_t>(config.x0.size())));
    if (nx0 > plan.radii[static_cast<std::size_t>(config.r0)]) {
        std::ostringstream os;
        os << "scheme: x0 would be truncated at step 0 (|x0| = " << nx0
           << ", radius = " << plan.radii[static_cast<std::size_t>(config.r0)]
           << " in regime " << (config.r0 + 1)
           << "); decrease delta or raise the step-control coefficient";
        throw ConfigError(os.str());
    }

    plan.chain = markov::transition_matrix(m.generator, config.delta);
    return plan;
}

PathSample simulate(const model::HybridModel& m, const SchemeConfig& config,
                    rng::Stream& stream) {
    const Plan plan = prepare(m, config);
    std::vector<int> regimes;
    std::vector<double> db;
    draw_inputs(m, plan, stream, regimes, db);

    const int n = m.n;
    PathSample out;
    out.delta = config.delta;
    out.times.resize(static_cast<std::size_t>(plan.steps) + 1);
    for (long k = 0; k <= plan.steps; ++k) {
        out.times[static_cast<std::size_t>(k)] = static_cast<double>(k) * config.delta;
    }
    out.regimes = regimes;
    out.db = db;
    const std::size_t nan_fill = static_cast<std::size_t>(plan.steps + 1) * n;
    out.y.assign(nan_fill, std::numeric_limits<double>::quiet_NaN());
    out.y_tilde.assign(nan_fill, std::numeric_limits<double>::quiet_NaN());

    std::vector<double> y(config.x0.data(), config.x0.data() + n);
    for (int i = 0; i < n; ++i) {
        out.y[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(i)];
        out.y_tilde[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(i)];
    }
    out.diverged_at = dispatch_loop(
        m, plan, regimes, db, y,
        [&](long k, std::span<const double> ytilde, std::span<const double> yk, int) {
            const std::size_t base = static_cast<std::size_t>(k) * n;
            for (int i = 0; i < n; ++i) {
                out.y_tilde[base + static_cast<std::size_t>(i)] = ytilde[static_cast<std::size_t>(i)];
                out.y[base + static_cast<std::size_t>(i)] = yk[static_cast<std::size_t>(i)];
            }
        });
    return out;
}

PathResult run_path(const model::HybridModel& m, const SchemeConfig& config,
                    rng::Stream& stream, const StepObserver* observer) {
    const Plan plan = prepare(m, config);
    std::vector<int> regimes;
    std::vector<double> db;
    draw_inputs(m, plan, stream, regimes, db);
    return run_path_given(m, config, regimes, db, observer);
}

PathResult run_path_given(const model::HybridModel& m, const SchemeConfig& config,
                          std::span<const int> regimes, std::span<const double> db,
                          const StepObserver* observer) {
    const Plan plan = prepare(m, config);
    if (regimes.size() != static_cast<std::size_t>(plan.steps) + 1) {
        throw ConfigError("run_path_given: regime path length must be steps + 1");
    }
    if (db.size() != static_cast<std::size_t>(plan.steps) * m.d) {
        throw ConfigError("run_path_given: increment array length must be steps * d");
    }
    std::vector<double> y(config.x0.data(), config.x0.data() + m.n);
    int last_regime = config.r0;
    const double delta = config.delta;
    const long diverged = dispatch_loop(
        m, plan, regimes, db, y,
        [&](long k, std::span<const double>, std::span<const double> yk, int r) {
            last_regime = r;
            if (observer && *observer) {
                (*observer)(k, static_cast<double>(k) * delta, r, yk);
            }
        });
    PathResult res;
    res.terminal = Eigen::Map<const Eigen::VectorXd>(y.data(), m.n);
    res.terminal_regime = last_regime;
    res.diverged_at = diverged;
    return res;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> step_truncated(
    const Eigen::VectorXd& y, int r, int r_next, const Eigen::VectorXd& db,
    const model::HybridModel& m, const Plan& plan) {
    const int n = m.n, d = m.d;
    std::vector<double> f(n), g(static_cast<std::size_t>(n) * d);
    const std::span<const double> ys(y.data(), static_cast<std::size_t>(n));
    m.drift(ys, r, f);
    m.diffusion(ys, r, g);
    Eigen::VectorXd ytilde(n);
    const double delta = plan.config.delta;
    for (int i = 0; i < n; ++i) {
        double acc = y(i) + f[static_cast<std::size_t>(i)] * delta;
        for (int l = 0; l < d; ++l) acc += g[static_cast<std::size_t>(i) * d + l] * db(l);
        ytilde(i) = acc;
    }
    if (!all_finite({ytilde.data(), static_cast<std::size_t>(n)})) {
        std::ostringstream os;
        os << "non-finite step output at state [";
        for (int i = 0; i < n; ++i) os << (i ? ", " : "") << y(i);
        os << "] in regime " << (r + 1);
        throw NumericalError(os.str());
    }
    Eigen::VectorXd ynext = ytilde;
    model::clamp_to_ball({ynext.data(), static_cast<std::size_t>(n)},
                         plan.radii[static_cast<std::size_t>(r_next)]);
    return {ytilde, ynext};
}

double step_backward_cubic(double y, int r, double db, std::span<const double> a,
                           std::span<const double> b, std::span<const double> sigma,
                           double delta) {
    const std::size_t ri = static_cast<std::size_t>(r);
    if (!(b[ri] < 0.0)) {
        throw ConfigError("backward cubic step requires b < 0");
    }
    if (a[ri] > 0.0 && !(delta < 1.0 / a[ri])) {
        throw ConfigError("backward cubic step requires delta < 1/a");
    }
    const double p = (1.0 / delta - a[ri]) / (-b[ri]);
    const double dterm = y * (1.0 + sigma[ri] * db) / (-2.0 * b[ri] * delta);
    const double c = p * p * p / 27.0;
    const double rad = dterm * dterm + c;
    if (!(rad >= 0.0)) {
        throw NumericalError("backward cubic step: negative discriminant");
    }
    const double h = std::sqrt(rad);
    double hp, hm;  // H + D and H - D, the larger one computed directly
    if (dterm >= 0.0) {
        hp = h + dterm;
        hm = c / hp;
    } else {
        hm = h - dterm;
        hp = c / hm;
    }
    return std::cbrt(hp) - std::cbrt(hm);
}

std::vector<double> exact_ginzburg_landau(std::span<const int> chain,
                                          std::span<const double> db,
                                          std::span<const double> a,
                                          std::span<const double> b,
                                          std::span<const double> sigma, double x0,
                                          double delta) {
    if (!(x0 > 0.0)) throw ConfigError("closed form requires x0 > 0");
    for (double bi : b) {
        if (bi > 0.0) throw ConfigError("closed form requires b <= 0 in every regime");
    }
    if (chain.size() != db.size() + 1) {
        throw ConfigError("closed form: chain length must be increments + 1");
    }
    std::vector<double> out(chain.size());
    out[0] = x0;
    double loge = 0.0;  // log E(t_k), integrated in log space for stability
    double integral = 0.0;
    for (std::size_t k = 0; k < db.size(); ++k) {
        const std::size_t r = static_cast<std::size_t>(chain[k]);
        const double e_old = std::exp(loge);
        integral += b[r] * e_old * e_old * delta;
        loge += (a[r] - 0.5 * sigma[r] * sigma[r]) * delta + sigma[r] * db[k];
        const double radicand = 1.0 - 2.0 * x0 * x0 * integral;
        if (!(radicand > 0.0)) {
            throw NumericalError("closed form: nonpositive denominator radicand");
        }
        out[k + 1] = x0 * std::exp(loge) / std::sqrt(radicand);
    }
    return out;
}

} // namespace sds::scheme
