#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>
#include <vector>

#include "sdsim/errors.hpp"
#include "sdsim/model.hpp"
#include "sdsim/rng.hpp"

namespace sds::model {

namespace {

void random_direction(rng::Stream& s, std::span<double> dir) {
    double norm = 0.0;
    do {
        norm = 0.0;
        for (double& v : dir) {
            v = s.normal();
            norm += v * v;
        }
        norm = std::sqrt(norm);
    } while (norm == 0.0);
    for (double& v : dir) v /= norm;
}

struct Evaluator {
    const HybridModel& model;
    int regime;
    std::vector<double> f, g;

    Evaluator(const HybridModel& m, int r)
        : model(m), regime(r), f(m.n), g(static_cast<std::size_t>(m.n) * m.d) {}

    void check_finite(std::span<const double> x) const {
        for (double v : f) {
            if (!std::isfinite(v)) {
                std::ostringstream os;
                os << "model '" << model.name << "' drift is non-finite at |x| = "
                   << l2_norm(x) << " in regime " << (regime + 1);
                throw ConfigError(os.str());
            }
        }
        for (double v : g) {
            if (!std::isfinite(v)) {
                std::ostringstream os;
                os << "model '" << model.name
                   << "' diffusion is non-finite at |x| = " << l2_norm(x)
                   << " in regime " << (regime + 1);
                throw ConfigError(os.str());
            }
        }
    }

    double growth_quotient(std::span<const double> x) {
        model.drift(x, regime, f);
        model.diffusion(x, regime, g);
        check_finite(x);
        const double nx = l2_norm(x);
        const double qf = l2_norm(f) / (1.0 + nx);
        const double qg = sq_frobenius(g) / ((1.0 + nx) * (1.0 + nx));
        return std::max(qf, qg);
    }

    double lipschitz_quotient(std::span<const double> x, std::span<const double> y,
                              std::span<double> fy, std::span<double> gy,
                              std::span<double> xy) {
        double dist2 = 0.0;
        for (int k = 0; k < model.n; ++k) {
            xy[k] = x[k] - y[k];
            dist2 += xy[k] * xy[k];
        }
        if (dist2 == 0.0) return 0.0;
        model.drift(x, regime, f);
        model.diffusion(x, regime, g);
        check_finite(x);
        model.drift(y, regime, fy);
        model.diffusion(y, regime, gy);
        double df2 = 0.0;
        for (int k = 0; k < model.n; ++k) {
            const double e = f[k] - fy[k];
            df2 += e * e;
        }
        double dg2 = 0.0;
        for (std::size_t k = 0; k < g.size(); ++k) {
            const double e = g[k] - gy[k];
            dg2 += e * e;
        }
        return std::max(std::sqrt(df2 / dist2), dg2 / dist2);
    }
};

struct PiecewiseNodes {
    std::vector<double> u, v;
};

Envelope make_piecewise_envelope(std::shared_ptr<const PiecewiseNodes> nodes) {
    const auto& u = nodes->u;
    const auto& v = nodes->v;
    const std::size_t last = u.size() - 1;
    const double tail_slope =
        (v[last] - v[last - 1]) / (u[last] - u[last - 1]);

    Envelope e;
    e.phi = [nodes, last, tail_slope](double x) {
        const auto& u = nodes->u;
        const auto& v = nodes->v;
        if (x <= u.front()) return v.front();
        if (x >= u[last]) return v[last] + tail_slope * (x - u[last]);
        const auto it = std::upper_bound(u.begin(), u.end(), x);
        const std::size_t j = static_cast<std::size_t>(it - u.begin()) - 1;
        const double t = (x - u[j]) / (u[j + 1] - u[j]);
        return v[j] + t * (v[j + 1] - v[j]);
    };
    e.inv = [nodes, last, tail_slope](double val) {
        const auto& u = nodes->u;
        const auto& v = nodes->v;
        if (val < v.front()) {
            std::ostringstream os;
            os << "envelope inverse undefined: value " << val
               << " is below phi(1) = " << v.front();
            throw ConfigError(os.str());
        }
        if (val >= v[last]) return u[last] + (val - v[last]) / tail_slope;
        const auto it = std::upper_bound(v.begin(), v.end(), val);
        const std::size_t j = static_cast<std::size_t>(it - v.begin()) - 1;
        const double slope = (v[j + 1] - v[j]) / (u[j + 1] - u[j]);
        return u[j] + (val - v[j]) / slope;
    };
    return e;
}

} // namespace

EnvelopeSet envelope_from_samples(const HybridModel& model, EnvelopeKind kind,
                                  std::span<const double> grid,
                                  std::uint64_t seed) {
    if (grid.empty()) throw ConfigError("envelope grid must not be empty");
    for (std::size_t j = 0; j < grid.size(); ++j) {
        if (grid[j] < 1.0 || (j > 0 && grid[j] <= grid[j - 1])) {
            throw ConfigError("envelope grid must be strictly increasing with minimum >= 1");
        }
    }
    std::vector<double> nodes;
    if (grid.front() > 1.0) nodes.push_back(1.0);
    nodes.insert(nodes.end(), grid.begin(), grid.end());
    if (nodes.size() == 1) nodes.push_back(2.0 * nodes.front());

    EnvelopeSet set;
    set.kind = kind;
    const int per_node = 96;
    const std::vector<double> colinear_t = {-1.0, -0.9, -0.5, 0.0,
                                            0.5,  0.9,  0.99, 1.0 - 1e-7};

    for (int i = 0; i < model.m; ++i) {
        rng::Stream stream = rng::Stream::derive(
            seed, {0x656e76ULL, static_cast<std::uint64_t>(kind), static_cast<std::uint64_t>(i)});
        Evaluator ev(model, i);
        std::vector<double> x(model.n), y(model.n), dir(model.n);
        std::vector<double> fy(model.n), gy(static_cast<std::size_t>(model.n) * model.d);
        std::vector<double> xy(model.n);

        std::vector<double> raw(nodes.size(), 0.0);
        double lo = 0.0;
        for (std::size_t j = 0; j < nodes.size(); ++j) {
            const double hi = nodes[j];
            double q = 0.0;
            auto consider_point = [&](double radius) {
                for (int k = 0; k < model.n; ++k) x[k] = radius * dir[k];
                if (kind == EnvelopeKind::growth) {
                    q = std::max(q, ev.growth_quotient(x));
                    return;
                }
                for (double t : colinear_t) {
                    for (int k = 0; k < model.n; ++k) y[k] = t * x[k];
                    q = std::max(q, ev.lipschitz_quotient(x, y, fy, gy, xy));
                }
                random_direction(stream, y);
                const double ry = radius * stream.uniform();
                for (int k = 0; k < model.n; ++k) y[k] *= ry;
                q = std::max(q, ev.lipschitz_quotient(x, y, fy, gy, xy));
            };
            for (int s = 0; s < per_node; ++s) {
                random_direction(stream, dir);
                const double radius =
                    (s % 3 == 0) ? hi : lo + (hi - lo) * stream.uniform();
                consider_point(radius);
            }
            for (int axis = 0; axis < model.n; ++axis) {
                for (double sign : {1.0, -1.0}) {
                    std::fill(dir.begin(), dir.end(), 0.0);
                    dir[axis] = sign;
                    consider_point(hi);
                }
            }
            raw[j] = q;
            lo = hi;
        }

        double running = 0.0;
        std::vector<double> v(nodes.size());
        for (std::size_t j = 0; j < nodes.size(); ++j) {
            running = std::max(running, raw[j]);
            v[j] = std::max(running * 1.05, 1e-12);
        }
        const double eps = 1e-9 * std::max(1.0, v.back());
        for (std::size_t j = 1; j < nodes.size(); ++j) {
            v[j] = std::max(v[j], v[j - 1] + eps * (nodes[j] - nodes[j - 1]));
        }

        auto pw = std::make_shared<PiecewiseNodes>();
        pw->u = nodes;
        pw->v = std::move(v);
        set.per_regime.push_back(make_piecewise_envelope(std::move(pw)));
    }
    return set;
}

} // namespace sds::model
