#include "sdsim/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "sdsim/errors.hpp"
#include "sdsim/markov.hpp"
#include "sdsim/numerics.hpp"
#include "sdsim/rng.hpp"

namespace sds::mc {

namespace {

constexpr std::uint64_t kTagClosedForm = 0xce;
constexpr std::uint64_t kTagFineRef = 0xfe;
constexpr std::uint64_t kTagMoment = 0x40;
constexpr std::uint64_t kTagLyapunov = 0x4c;

double pow_q(double v, int q) {
    if (q == 1) return v;
    if (q == 2) return v * v;
    return std::pow(v, q);
}

double root_q(double v, int q) {
    if (q == 1) return v;
    if (q == 2) return std::sqrt(v);
    return std::pow(v, 1.0 / q);
}

void draw_path_inputs(const scheme::Plan& plan, int d, rng::Stream& stream,
                      std::vector<int>& regimes, std::vector<double>& db) {
    regimes = markov::sample_chain(plan.chain, plan.config.r0,
                                   static_cast<int>(plan.steps), stream);
    db.resize(static_cast<std::size_t>(plan.steps) * d);
    const double scale = std::sqrt(plan.config.delta);
    for (double& v : db) v = scale * stream.normal();
}

/// Mean, delta-method error estimate and survivor count for one row of
/// pathwise values (NaN marks an excluded path). Deterministic: survivors
/// are gathered in path order and reduced pairwise.
ErrorRow reduce_row(double delta, std::span<const double> vals, int q) {
    std::vector<double> alive;
    alive.reserve(vals.size());
    for (double v : vals) {
        if (std::isfinite(v)) alive.push_back(v);
    }
    ErrorRow row;
    row.delta = delta;
    row.paths = static_cast<long>(alive.size());
    if (alive.empty()) return row;
    const double mean = numerics::pairwise_mean(alive);
    const double se = alive.size() > 1
                          ? numerics::sample_stddev(alive) / std::sqrt(static_cast<double>(alive.size()))
                          : 0.0;
    row.error = root_q(mean, q);
    if (mean > 0.0) {
        row.std_error = se * (1.0 / q) * std::pow(mean, 1.0 / q - 1.0);
    }
    return row;
}

void validate_common(std::span<const double> deltas, int q, long paths) {
    if (deltas.empty()) throw ConfigError("strong_error: empty delta list");
    for (double d : deltas) {
        if (!(d > 0.0 && d <= 1.0)) throw ConfigError("strong_error: deltas must lie in (0, 1]");
    }
    if (q < 1) throw ConfigError("strong_error: error order q must be >= 1");
    if (paths < 1) throw ConfigError("strong_error: need at least one path");
}

ErrorTable strong_error_closed_form(const model::HybridModel& m,
                                    const scheme::SchemeConfig& config,
                                    std::span<const double> deltas, int q, long paths,
                                    std::uint64_t seed, int workers) {
    if (m.n != 1 || m.d != 1) {
        throw ConfigError("closed-form reference requires a scalar model");
    }
    const std::size_t mm = static_cast<std::size_t>(m.m);
    if (config.cubic_a.size() != mm || config.cubic_b.size() != mm ||
        config.cubic_sigma.size() != mm) {
        throw ConfigError("closed-form reference requires per-regime cubic coefficients");
    }

    ErrorTable table;
    table.q = q;
    table.requested_paths = paths;
    for (std::size_t l = 0; l < deltas.size(); ++l) {
        scheme::SchemeConfig cfg = config;
        cfg.delta = deltas[l];
        const scheme::Plan plan = scheme::prepare(m, cfg);
        std::vector<double> vals(static_cast<std::size_t>(paths),
                                 std::numeric_limits<double>::quiet_NaN());
        parallel_paths(paths, workers, [&](long j) {
            rng::Stream stream = rng::Stream::derive(
                seed, {kTagClosedForm, static_cast<std::uint64_t>(l),
                       static_cast<std::uint64_t>(j)});
            std::vector<int> regimes;
            std::vector<double> db;
            draw_path_inputs(plan, m.d, stream, regimes, db);
            const auto res = scheme::run_path_given(m, cfg, regimes, db);
            if (!res.ok()) return;
            const auto exact =
                scheme::exact_ginzburg_landau(regimes, db, cfg.cubic_a, cfg.cubic_b,
                                              cfg.cubic_sigma, cfg.x0(0), cfg.delta);
            vals[static_cast<std::size_t>(j)] =
                pow_q(std::abs(res.terminal(0) - exact.back()), q);
        });
        ErrorRow row = reduce_row(deltas[l], vals, q);
        row.diverged = paths - row.paths;
        table.rows.push_back(row);
    }
    return table;
}

ErrorTable strong_error_fine_step(const model::HybridModel& m,
                                  const scheme::SchemeConfig& config, double delta_ref,
                                  std::span<const double> deltas, int q, long paths,
                                  std::uint64_t seed, int workers) {
    if (!(delta_ref > 0.0 && delta_ref <= 1.0)) {
        throw ConfigError("strong_error: reference delta must lie in (0, 1]");
    }
    scheme::SchemeConfig cfg_ref = config;
    cfg_ref.delta = delta_ref;
    const scheme::Plan plan_ref = scheme::prepare(m, cfg_ref);
    const long steps_ref = plan_ref.steps;

    const std::size_t levels = deltas.size();
    std::vector<scheme::SchemeConfig> cfgs(levels, config);
    std::vector<long> ratios(levels), steps(levels);
    for (std::size_t l = 0; l < levels; ++l) {
        cfgs[l].delta = deltas[l];
        const double raw = deltas[l] / delta_ref;
        const long r = std::lround(raw);
        if (r < 1 || std::abs(raw - static_cast<double>(r)) > 1e-9 * static_cast<double>(r)) {
            std::ostringstream os;
            os << "strong_error: delta = " << deltas[l]
               << " is not an integer multiple of the reference delta " << delta_ref;
            throw ConfigError(os.str());
        }
        ratios[l] = r;
        steps[l] = scheme::prepare(m, cfgs[l]).steps;
        if (steps[l] * r != steps_ref) {
            throw ConfigError("strong_error: coarse and reference grids do not align over the horizon");
        }
    }

    std::vector<std::vector<double>> vals(
        levels, std::vector<double>(static_cast<std::size_t>(paths),
                                    std::numeric_limits<double>::quiet_NaN()));
    std::vector<char> ref_dead(static_cast<std::size_t>(paths), 0);

    const int d = m.d;
    parallel_paths(paths, workers, [&](long j) {
        rng::Stream stream =
            rng::Stream::derive(seed, {kTagFineRef, static_cast<std::uint64_t>(j)});
        std::vector<int> chain_f;
        std::vector<double> db_f;
        draw_path_inputs(plan_ref, d, stream, chain_f, db_f);
        const auto ref = scheme::run_path_given(m, cfg_ref, chain_f, db_f);
        if (!ref.ok()) {
            ref_dead[static_cast<std::size_t>(j)] = 1;
            return;
        }
        std::vector<int> chain_c;
        std::vector<double> db_c;
        for (std::size_t l = 0; l < levels; ++l) {
            const long r = ratios[l];
            const long sc = steps[l];
            chain_c.resize(static_cast<std::size_t>(sc) + 1);
            for (long k = 0; k <= sc; ++k) {
                chain_c[static_cast<std::size_t>(k)] = chain_f[static_cast<std::size_t>(k * r)];
            }
            db_c.assign(static_cast<std::size_t>(sc) * d, 0.0);
            for (long k = 0; k < sc; ++k) {
                for (long i = k * r; i < (k + 1) * r; ++i) {
                    for (int c = 0; c < d; ++c) {
                        db_c[static_cast<std::size_t>(k) * d + c] +=
                            db_f[static_cast<std::size_t>(i) * d + c];
                    }
                }
            }
            const auto res = scheme::run_path_given(m, cfgs[l], chain_c, db_c);
            if (!res.ok()) continue;
            vals[l][static_cast<std::size_t>(j)] =
                pow_q((res.terminal - ref.terminal).norm(), q);
        }
    });

    ErrorTable table;
    table.q = q;
    table.requested_paths = paths;
    for (char dead : ref_dead) table.reference_diverged += dead;
    for (std::size_t l = 0; l < levels; ++l) {
        ErrorRow row = reduce_row(deltas[l], vals[l], q);
        row.diverged = paths - table.reference_diverged - row.paths;
        table.rows.push_back(row);
    }
    return table;
}

} // namespace

void parallel_paths(long count, int workers, const std::function<void(long)>& body) {
    if (count <= 0) return;
    int w = workers;
    if (w < 1) w = 1;
    if (static_cast<long>(w) > count) w = static_cast<int>(count);
    if (w == 1) {
        for (long j = 0; j < count; ++j) body(j);
        return;
    }
    std::atomic<long> next{0};
    std::mutex mu;
    std::exception_ptr first_error;
    auto run = [&]() {
        for (;;) {
            const long j = next.fetch_add(1);
            if (j >= count) return;
            try {
                body(j);
            } catch (...) {
                const std::lock_guard<std::mutex> lock(mu);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(w) - 1);
    for (int i = 1; i < w; ++i) pool.emplace_back(run);
    run();
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

ErrorTable strong_error(const model::HybridModel& model, const scheme::SchemeConfig& config,
                        const Reference& reference, std::span<const double> deltas, int q,
                        long paths, std::uint64_t seed, int workers) {
    validate_common(deltas, q, paths);
    if (reference.kind == Reference::Kind::closed_form) {
        return strong_error_closed_form(model, config, deltas, q, paths, seed, workers);
    }
    return strong_error_fine_step(model, config, reference.delta_ref, deltas, q, paths,
                                  seed, workers);
}

RateFit fit_rate(const ErrorTable& table) {
    RateFit fit;
    std::vector<double> xs, ys;
    for (const auto& row : table.rows) {
        if (std::isfinite(row.error) && row.error > 0.0) {
            xs.push_back(std::log(row.delta));
            ys.push_back(std::log(row.error));
        } else {
            std::ostringstream os;
            os << "excluded delta = " << row.delta << " from the rate fit (error "
               << row.error << ")";
            fit.warnings.push_back(os.str());
        }
    }
    if (xs.size() < 3) {
        throw ConfigError("fit_rate: need at least 3 rows with positive error");
    }
    const auto line = numerics::fit_line(xs, ys);
    fit.slope = line.slope;
    fit.intercept = line.intercept;
    fit.residual_rms = line.residual_rms;
    fit.used_rows = static_cast<int>(xs.size());
    return fit;
}

MomentTrace moment_trace(const model::HybridModel& model, const scheme::SchemeConfig& config,
                         double p, long paths, std::span<const double> sample_times,
                         std::uint64_t seed, int workers) {
    if (!(p > 0.0)) throw ConfigError("moment_trace: order p must be positive");
    if (paths < 1) throw ConfigError("moment_trace: need at least one path");
    if (sample_times.empty()) throw ConfigError("moment_trace: no sample times");
    const scheme::Plan plan = scheme::prepare(model, config);

    const std::size_t count = sample_times.size();
    std::vector<long> ks(count);
    MomentTrace trace;
    trace.p = p;
    trace.times.resize(count);
    for (std::size_t s = 0; s < count; ++s) {
        const long k = std::lround(sample_times[s] / config.delta);
        if (k < 0 || k > plan.steps) {
            throw ConfigError("moment_trace: sample time outside the simulated grid");
        }
        ks[s] = k;
        trace.times[s] = static_cast<double>(k) * config.delta;
    }
    std::vector<std::size_t> order(count);
    for (std::size_t s = 0; s < count; ++s) order[s] = s;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return ks[a] < ks[b]; });

    const double x0p = std::pow(
        model::l2_norm({config.x0.data(), static_cast<std::size_t>(config.x0.size())}), p);
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(paths));
    std::vector<char> dead(static_cast<std::size_t>(paths), 0);
    parallel_paths(paths, workers, [&](long j) {
        rng::Stream stream =
            rng::Stream::derive(seed, {kTagMoment, static_cast<std::uint64_t>(j)});
        std::vector<double>& row = rows[static_cast<std::size_t>(j)];
        row.assign(count, 0.0);
        std::size_t pos = 0;
        while (pos < count && ks[order[pos]] == 0) {
            row[order[pos]] = x0p;
            ++pos;
        }
        scheme::StepObserver observer = [&](long k, double, int, std::span<const double> y) {
            while (pos < count && ks[order[pos]] == k) {
                row[order[pos]] = std::pow(model::l2_norm(y), p);
                ++pos;
            }
        };
        const auto res = scheme::run_path(model, config, stream, &observer);
        if (!res.ok()) dead[static_cast<std::size_t>(j)] = 1;
    });

    for (long j = 0; j < paths; ++j) {
        if (dead[static_cast<std::size_t>(j)]) {
            ++trace.diverged;
        } else {
            trace.per_path.push_back(std::move(rows[static_cast<std::size_t>(j)]));
        }
    }
    trace.paths = static_cast<long>(trace.per_path.size());
    if (trace.paths == 0) {
        throw NumericalError("moment_trace: every path diverged");
    }
    trace.moments.resize(count);
    std::vector<double> column(trace.per_path.size());
    for (std::size_t s = 0; s < count; ++s) {
        for (std::size_t j = 0; j < trace.per_path.size(); ++j) column[j] = trace.per_path[j][s];
        trace.moments[s] = numerics::pairwise_mean(column);
    }
    return trace;
}

SlopeEstimate trace_slope(const MomentTrace& trace, double t0, double t1) {
    std::vector<std::size_t> sel;
    for (std::size_t s = 0; s < trace.times.size(); ++s) {
        if (trace.times[s] >= t0 - 1e-9 && trace.times[s] <= t1 + 1e-9) sel.push_back(s);
    }
    if (sel.size() < 2) {
        throw ConfigError("trace_slope: window contains fewer than 2 sample times");
    }
    if (trace.per_path.size() < 2) {
        throw ConfigError("trace_slope: need at least 2 surviving paths");
    }
    std::vector<double> xs(sel.size()), ys(sel.size());
    for (std::size_t i = 0; i < sel.size(); ++i) xs[i] = trace.times[sel[i]];
    std::vector<double> slopes(trace.per_path.size());
    for (std::size_t j = 0; j < trace.per_path.size(); ++j) {
        for (std::size_t i = 0; i < sel.size(); ++i) ys[i] = trace.per_path[j][sel[i]];
        slopes[j] = numerics::fit_line(xs, ys).slope;
    }
    SlopeEstimate est;
    est.paths = static_cast<long>(slopes.size());
    est.slope = numerics::pairwise_mean(slopes);
    est.std_error = numerics::sample_stddev(slopes) / std::sqrt(static_cast<double>(slopes.size()));
    return est;
}

LyapunovResult lyapunov_estimate(const model::HybridModel& model,
                                 const scheme::SchemeConfig& config, long paths,
                                 std::uint64_t seed, int workers) {
    if (paths < 1) throw ConfigError("lyapunov_estimate: need at least one path");
    std::vector<double> zero(static_cast<std::size_t>(model.n), 0.0);
    std::vector<double> f(static_cast<std::size_t>(model.n));
    std::vector<double> g(static_cast<std::size_t>(model.n) * model.d);
    for (int i = 0; i < model.m; ++i) {
        model.drift(zero, i, f);
        model.diffusion(zero, i, g);
        for (double v : f) {
            if (v != 0.0) throw ConfigError("lyapunov_estimate: drift does not vanish at 0");
        }
        for (double v : g) {
            if (v != 0.0) throw ConfigError("lyapunov_estimate: diffusion does not vanish at 0");
        }
    }

    LyapunovResult result;
    if (model::l2_norm({config.x0.data(), static_cast<std::size_t>(config.x0.size())}) == 0.0) {
        result.degenerate = true;
        result.zero_paths = paths;
        return result;
    }

    const scheme::Plan plan = scheme::prepare(model, config);
    const double total_time = static_cast<double>(plan.steps) * config.delta;
    std::vector<double> vals(static_cast<std::size_t>(paths),
                             std::numeric_limits<double>::quiet_NaN());
    std::vector<char> zero_flag(static_cast<std::size_t>(paths), 0);
    parallel_paths(paths, workers, [&](long j) {
        rng::Stream stream =
            rng::Stream::derive(seed, {kTagLyapunov, static_cast<std::uint64_t>(j)});
        const auto res = scheme::run_path(model, config, stream);
        if (!res.ok()) return;
        const double norm = res.terminal.norm();
        if (norm == 0.0) {
            zero_flag[static_cast<std::size_t>(j)] = 1;
            return;
        }
        vals[static_cast<std::size_t>(j)] = std::log(norm) / total_time;
    });

    for (long j = 0; j < paths; ++j) {
        if (zero_flag[static_cast<std::size_t>(j)]) {
            ++result.zero_paths;
        } else if (std::isfinite(vals[static_cast<std::size_t>(j)])) {
            result.per_path.push_back(vals[static_cast<std::size_t>(j)]);
        } else {
            ++result.diverged;
        }
    }
    if (!result.per_path.empty()) {
        result.mean = numerics::pairwise_mean(result.per_path);
        if (result.per_path.size() > 1) {
            result.std_error = numerics::sample_stddev(result.per_path) /
                               std::sqrt(static_cast<double>(result.per_path.size()));
        }
    }
    return result;
}

} // namespace sds::mc
