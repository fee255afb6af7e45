#include "sdsim/assumptions.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sdsim/errors.hpp"
#include "sdsim/rng.hpp"

namespace sds::model {

namespace {

void require_spd(const Eigen::MatrixXd& q, int index) {
    const double scale = std::max(1.0, q.cwiseAbs().maxCoeff());
    if ((q - q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        std::ostringstream os;
        os << "matrix Q[" << (index + 1) << "] must be symmetric";
        throw ConfigError(os.str());
    }
    Eigen::LLT<Eigen::MatrixXd> llt(q);
    if (llt.info() != Eigen::Success) {
        std::ostringstream os;
        os << "matrix Q[" << (index + 1) << "] must be positive-definite";
        throw ConfigError(os.str());
    }
}

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

void check_finite(const HybridModel& model, int regime, std::span<const double> x,
                  std::span<const double> values, const char* what) {
    for (double v : values) {
        if (!std::isfinite(v)) {
            std::ostringstream os;
            os << "model '" << model.name << "' " << what
               << " is non-finite at |x| = " << l2_norm(x) << " in regime "
               << (regime + 1);
            throw ConfigError(os.str());
        }
    }
}

void finish_report(AssumptionReport& rep, const HybridModel& model) {
    if (!rep.declared.empty()) {
        double worst = std::numeric_limits<double>::infinity();
        for (int i = 0; i < model.m; ++i) {
            worst = std::min(worst, rep.declared[i] - rep.fitted[i]);
        }
        rep.margin = worst;
    }
    rep.has_stationary = markov::is_irreducible(model.generator);
    if (rep.has_stationary) {
        const auto pi = markov::stationary_distribution(model.generator);
        const auto& c = rep.declared.empty() ? rep.fitted : rep.declared;
        double dot = 0.0;
        for (int i = 0; i < model.m; ++i) dot += pi.pi(i) * c[i];
        rep.pi_dot = dot;
    }
}

} // namespace

AssumptionReport check_moment_condition(const HybridModel& model,
                                        const std::vector<Eigen::MatrixXd>& q,
                                        double p_bar, long budget,
                                        std::span<const double> declared,
                                        std::uint64_t seed) {
    if (!(p_bar > 0.0)) throw ConfigError("moment condition: p-bar must be positive");
    if (q.size() != 1 && static_cast<int>(q.size()) != model.m) {
        throw ConfigError("moment condition: supply one shared Q or one per regime");
    }
    if (!declared.empty() && static_cast<int>(declared.size()) != model.m) {
        throw ConfigError("moment condition: declared constants must match the regime count");
    }
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (q[i].rows() != model.n || q[i].cols() != model.n) {
            throw ConfigError("moment condition: Q dimension does not match the state dimension");
        }
        require_spd(q[i], static_cast<int>(i));
    }

    AssumptionReport rep;
    rep.id = ConditionId::moment_bound;
    rep.order = p_bar;
    rep.declared.assign(declared.begin(), declared.end());
    rep.shared_q = true;
    for (std::size_t i = 1; i < q.size(); ++i) {
        if ((q[i] - q[0]).cwiseAbs().maxCoeff() != 0.0) rep.shared_q = false;
    }
    rep.fitted.assign(model.m, -std::numeric_limits<double>::infinity());

    const double r_lo = 10.0, r_hi = 1e4;
    const double outer = 1e3;  // fit uses radii in [outer, r_hi]
    std::vector<double> x(model.n), f(model.n);
    std::vector<double> g(static_cast<std::size_t>(model.n) * model.d);
    Eigen::VectorXd xv(model.n), w(model.n);

    for (int i = 0; i < model.m; ++i) {
        const Eigen::MatrixXd& qi = q.size() == 1 ? q[0] : q[i];
        rng::Stream stream = rng::Stream::derive(
            seed, {0x6d6f6dULL, static_cast<std::uint64_t>(i)});
        std::vector<double> dir(model.n);

        auto quotient = [&]() {
            model.drift(x, i, f);
            model.diffusion(x, i, g);
            check_finite(model, i, x, f, "drift");
            check_finite(model, i, x, g, "diffusion");
            for (int k = 0; k < model.n; ++k) xv(k) = x[k];
            w = qi * xv;
            const double xqx = xv.dot(w);
            double xqf = 0.0;
            for (int k = 0; k < model.n; ++k) xqf += w(k) * f[k];
            double trace = 0.0, xqg2 = 0.0;
            for (int l = 0; l < model.d; ++l) {
                double col_dot = 0.0;
                Eigen::VectorXd col(model.n);
                for (int k = 0; k < model.n; ++k) col(k) = g[static_cast<std::size_t>(k) * model.d + l];
                trace += col.dot(qi * col);
                for (int k = 0; k < model.n; ++k) col_dot += w(k) * col(k);
                xqg2 += col_dot * col_dot;
            }
            const double psi = 2.0 * xqf + trace;
            return ((1.0 + xqx) * psi - (2.0 - p_bar) * xqg2) / (xqx * xqx);
        };

        auto consider = [&](double radius) {
            for (int k = 0; k < model.n; ++k) x[k] = radius * dir[k];
            const double val = quotient();
            if (radius >= outer) rep.fitted[i] = std::max(rep.fitted[i], val);
            ++rep.samples;
        };

        const long draws = std::max<long>(budget, 64);
        for (long s = 0; s < draws; ++s) {
            random_direction(stream, dir);
            const double radius = r_lo * std::pow(r_hi / r_lo, stream.uniform());
            consider(radius);
        }
        for (double radius : {1e3, 3.16e3, 1e4}) {
            for (int axis = 0; axis < model.n; ++axis) {
                for (double sign : {1.0, -1.0}) {
                    std::fill(dir.begin(), dir.end(), 0.0);
                    dir[axis] = sign;
                    consider(radius);
                }
            }
            if (model.n == 2) {
                for (int a = 0; a < 128; ++a) {
                    const double ang = 2.0 * M_PI * a / 128.0;
                    dir[0] = std::cos(ang);
                    dir[1] = std::sin(ang);
                    consider(radius);
                }
            }
        }
    }

    finish_report(rep, model);
    return rep;
}

AssumptionReport check_contraction_condition(const HybridModel& model, double rho,
                                             long budget,
                                             std::span<const double> declared,
                                             std::uint64_t seed) {
    if (!(rho > 0.0)) throw ConfigError("contraction condition: rho must be positive");
    if (!declared.empty() && static_cast<int>(declared.size()) != model.m) {
        throw ConfigError("contraction condition: declared constants must match the regime count");
    }

    AssumptionReport rep;
    rep.id = ConditionId::contraction;
    rep.order = rho;
    rep.declared.assign(declared.begin(), declared.end());
    rep.fitted.assign(model.m, -std::numeric_limits<double>::infinity());

    std::vector<double> x(model.n), y(model.n), dx(model.n);
    std::vector<double> fx(model.n), fy(model.n);
    std::vector<double> gx(static_cast<std::size_t>(model.n) * model.d);
    std::vector<double> gy(gx.size());
    const std::vector<double> colinear_t = {-1.0, -0.9, -0.5, 0.0, 0.5,
                                            0.9,  0.99, 1.0 - 1e-8};

    for (int i = 0; i < model.m; ++i) {
        rng::Stream stream = rng::Stream::derive(
            seed, {0x636f6eULL, static_cast<std::uint64_t>(i)});
        std::vector<double> dir(model.n);

        auto quotient = [&]() {
            double dist2 = 0.0;
            for (int k = 0; k < model.n; ++k) {
                dx[k] = x[k] - y[k];
                dist2 += dx[k] * dx[k];
            }
            if (dist2 == 0.0) return;
            model.drift(x, i, fx);
            model.diffusion(x, i, gx);
            check_finite(model, i, x, fx, "drift");
            check_finite(model, i, x, gx, "diffusion");
            model.drift(y, i, fy);
            model.diffusion(y, i, gy);
            double dxf = 0.0;
            for (int k = 0; k < model.n; ++k) dxf += dx[k] * (fx[k] - fy[k]);
            double gsq = 0.0, dxg2 = 0.0;
            for (int l = 0; l < model.d; ++l) {
                double col_dot = 0.0;
                for (int k = 0; k < model.n; ++k) {
                    const double e = gx[static_cast<std::size_t>(k) * model.d + l] -
                                     gy[static_cast<std::size_t>(k) * model.d + l];
                    gsq += e * e;
                    col_dot += dx[k] * e;
                }
                dxg2 += col_dot * col_dot;
            }
            const double psi = 2.0 * dxf + gsq;
            const double val = (dist2 * psi - (2.0 - rho) * dxg2) / (dist2 * dist2);
            rep.fitted[i] = std::max(rep.fitted[i], val);
            ++rep.samples;
        };

        auto battery = [&](double radius) {
            for (int k = 0; k < model.n; ++k) x[k] = radius * dir[k];
            for (double t : colinear_t) {
                // separations below ~1e-10 lose the drift difference to
                // rounding when the drift carries additive constants
                if (radius * (1.0 - t) < 1e-10) continue;
                for (int k = 0; k < model.n; ++k) y[k] = t * x[k];
                quotient();
            }
            if (model.n > 1) {
                // near-coincident pair offset perpendicular to x
                int other = 0;
                for (int k = 1; k < model.n; ++k) {
                    if (std::abs(dir[k]) < std::abs(dir[other])) other = k;
                }
                for (int k = 0; k < model.n; ++k) y[k] = x[k];
                y[other] += std::max(1e-7 * radius, 1e-10);
                quotient();
            }
            random_direction(stream, y);
            const double ry = radius * stream.uniform();
            for (int k = 0; k < model.n; ++k) y[k] *= ry;
            quotient();
        };

        const long draws = std::max<long>(budget, 64);
        for (long s = 0; s < draws; ++s) {
            random_direction(stream, dir);
            const double radius = 1e-3 * std::pow(1e6, stream.uniform());
            battery(radius);
        }
        for (double radius : {1e-8, 1e-6, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3}) {
            for (int axis = 0; axis < model.n; ++axis) {
                for (double sign : {1.0, -1.0}) {
                    std::fill(dir.begin(), dir.end(), 0.0);
                    dir[axis] = sign;
                    battery(radius);
                }
            }
        }
    }

    finish_report(rep, model);
    return rep;
}

} // namespace sds::model
