#include "sdsim/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "sdsim/errors.hpp"
#include "sdsim/montecarlo.hpp"
#include "sdsim/numerics.hpp"
#include "sdsim/rng.hpp"

namespace sds::measure {

namespace {

constexpr long kAssignmentCap = 2000;
constexpr std::uint64_t kTagInvariant = 0x49;

/// Minimal-cost perfect assignment on an n x n cost matrix (row-major) by
/// shortest augmenting paths with dual potentials; O(n^3).
double solve_assignment(const std::vector<double>& cost, long n) {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<long> match(static_cast<std::size_t>(n) + 1, 0);  // column -> row, 1-based
    std::vector<long> way(static_cast<std::size_t>(n) + 1, 0);
    std::vector<double> minv(static_cast<std::size_t>(n) + 1);
    std::vector<char> used(static_cast<std::size_t>(n) + 1);
    for (long i = 1; i <= n; ++i) {
        match[0] = i;
        long j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[static_cast<std::size_t>(j0)] = 1;
            const long i0 = match[static_cast<std::size_t>(j0)];
            long j1 = -1;
            double delta = inf;
            const double* row = cost.data() + static_cast<std::size_t>(i0 - 1) * n;
            for (long j = 1; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) continue;
                const double cur = row[j - 1] - u[static_cast<std::size_t>(i0)] -
                                   v[static_cast<std::size_t>(j)];
                if (cur < minv[static_cast<std::size_t>(j)]) {
                    minv[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (minv[static_cast<std::size_t>(j)] < delta) {
                    delta = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (long j = 0; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(match[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    minv[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (match[static_cast<std::size_t>(j0)] != 0);
        do {
            const long j1 = way[static_cast<std::size_t>(j0)];
            match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<double> picked(static_cast<std::size_t>(n));
    for (long j = 1; j <= n; ++j) {
        picked[static_cast<std::size_t>(j - 1)] =
            cost[static_cast<std::size_t>(match[static_cast<std::size_t>(j)] - 1) * n + (j - 1)];
    }
    return numerics::pairwise_sum(picked);
}

void require_uniform_weights(const EmpiricalMeasure& mu, const char* who) {
    const double w = 1.0 / static_cast<double>(mu.count());
    for (double wi : mu.weights) {
        if (std::abs(wi - w) > 1e-9 * w) {
            throw ConfigError(std::string(who) + ": requires uniformly weighted measures");
        }
    }
}

/// Evenly spaced thinning of 0..count-1 down to `keep` indices.
std::vector<long> strided_indices(long count, long keep) {
    std::vector<long> idx(static_cast<std::size_t>(keep));
    for (long i = 0; i < keep; ++i) {
        idx[static_cast<std::size_t>(i)] = (i * count) / keep;
    }
    return idx;
}

double pair_cost(const EmpiricalMeasure& mu, long i, const EmpiricalMeasure& nu, long j,
                 double p) {
    const auto a = mu.point(i);
    const auto b = nu.point(j);
    double s = 0.0;
    for (int c = 0; c < mu.n; ++c) {
        const double d = a[static_cast<std::size_t>(c)] - b[static_cast<std::size_t>(c)];
        s += d * d;
    }
    double cost = std::pow(std::sqrt(s), p);
    if (mu.regimes[static_cast<std::size_t>(i)] != nu.regimes[static_cast<std::size_t>(j)]) {
        cost += 1.0;
    }
    return cost;
}

/// Lexicographic order on (x, regime), used for the comonotone pairing.
std::vector<long> lexicographic_order(const EmpiricalMeasure& mu) {
    std::vector<long> idx(static_cast<std::size_t>(mu.count()));
    std::iota(idx.begin(), idx.end(), 0L);
    std::sort(idx.begin(), idx.end(), [&](long a, long b) {
        const auto xa = mu.point(a);
        const auto xb = mu.point(b);
        for (int c = 0; c < mu.n; ++c) {
            if (xa[static_cast<std::size_t>(c)] != xb[static_cast<std::size_t>(c)]) {
                return xa[static_cast<std::size_t>(c)] < xb[static_cast<std::size_t>(c)];
            }
        }
        return mu.regimes[static_cast<std::size_t>(a)] < mu.regimes[static_cast<std::size_t>(b)];
    });
    return idx;
}

} // namespace

void EmpiricalMeasure::validate() const {
    if (n <= 0) throw ConfigError("empirical measure: dimension must be positive");
    if (regimes.empty()) throw ConfigError("empirical measure: no samples");
    if (xs.size() != static_cast<std::size_t>(count()) * n || weights.size() != regimes.size()) {
        throw ConfigError("empirical measure: inconsistent array sizes");
    }
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw ConfigError("empirical measure: negative weight");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw ConfigError("empirical measure: weights must sum to 1");
    }
}

EmpiricalMeasure EmpiricalMeasure::uniform(int n, std::vector<double> xs,
                                           std::vector<int> regimes) {
    EmpiricalMeasure mu;
    mu.n = n;
    mu.xs = std::move(xs);
    mu.regimes = std::move(regimes);
    mu.weights.assign(mu.regimes.size(), 1.0 / static_cast<double>(mu.regimes.size()));
    mu.validate();
    return mu;
}

std::vector<double> component(const EmpiricalMeasure& mu, int axis) {
    if (axis < 0 || axis >= mu.n) throw ConfigError("component: axis out of range");
    std::vector<double> out(static_cast<std::size_t>(mu.count()));
    for (long i = 0; i < mu.count(); ++i) {
        out[static_cast<std::size_t>(i)] = mu.point(i)[static_cast<std::size_t>(axis)];
    }
    return out;
}

double Ecdf::operator()(double t) const {
    const auto it = std::upper_bound(sorted.begin(), sorted.end(), t);
    return static_cast<double>(it - sorted.begin()) / static_cast<double>(sorted.size());
}

Ecdf ecdf(std::span<const double> values) {
    if (values.empty()) throw ConfigError("ecdf: empty sample");
    Ecdf f;
    f.sorted.assign(values.begin(), values.end());
    std::sort(f.sorted.begin(), f.sorted.end());
    return f;
}

KsResult ks_two_sample(std::span<const double> s1, std::span<const double> s2, double alpha) {
    if (s1.empty() || s2.empty()) throw ConfigError("ks_two_sample: empty sample");
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ConfigError("ks_two_sample: significance level must lie in (0, 1)");
    }
    std::vector<double> a(s1.begin(), s1.end());
    std::vector<double> b(s2.begin(), s2.end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());

    KsResult res;
    res.n = static_cast<long>(a.size());
    res.m = static_cast<long>(b.size());
    res.alpha = alpha;
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double t = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= t) ++i;
        while (j < b.size() && b[j] <= t) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / static_cast<double>(a.size()) -
                                 static_cast<double>(j) / static_cast<double>(b.size())));
    }
    res.statistic = d;
    const double c = std::sqrt(-std::log(alpha / 2.0) / 2.0);
    const double nn = static_cast<double>(res.n);
    const double mm = static_cast<double>(res.m);
    res.critical = c * std::sqrt((nn + mm) / (nn * mm));
    res.reject = res.statistic > res.critical;
    return res;
}

WassersteinResult wasserstein_p(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                double p) {
    mu.validate();
    nu.validate();
    if (mu.n != nu.n) throw ConfigError("wasserstein_p: dimension mismatch");
    if (!(p > 0.0 && p <= 1.0)) throw ConfigError("wasserstein_p: order must lie in (0, 1]");
    require_uniform_weights(mu, "wasserstein_p");
    require_uniform_weights(nu, "wasserstein_p");

    const long size = std::min(mu.count(), nu.count());
    if (size > kAssignmentCap) {
        std::ostringstream os;
        os << "wasserstein_p: support size " << size << " exceeds the exact-solver cap "
           << kAssignmentCap << "; subsample the measures first";
        throw ConfigError(os.str());
    }
    const auto mi = strided_indices(mu.count(), size);
    const auto ni = strided_indices(nu.count(), size);

    std::vector<double> cost(static_cast<std::size_t>(size) * size);
    for (long i = 0; i < size; ++i) {
        for (long j = 0; j < size; ++j) {
            cost[static_cast<std::size_t>(i) * size + j] =
                pair_cost(mu, mi[static_cast<std::size_t>(i)], nu,
                          ni[static_cast<std::size_t>(j)], p);
        }
    }

    WassersteinResult out;
    out.support = size;
    out.distance = solve_assignment(cost, size) / static_cast<double>(size);

    // Cheap diagnostic upper bound: pair the lexicographically sorted clouds.
    EmpiricalMeasure mus, nus;
    mus.n = mu.n;
    nus.n = nu.n;
    for (long i = 0; i < size; ++i) {
        const long a = mi[static_cast<std::size_t>(i)];
        const long b = ni[static_cast<std::size_t>(i)];
        mus.xs.insert(mus.xs.end(), mu.point(a).begin(), mu.point(a).end());
        mus.regimes.push_back(mu.regimes[static_cast<std::size_t>(a)]);
        nus.xs.insert(nus.xs.end(), nu.point(b).begin(), nu.point(b).end());
        nus.regimes.push_back(nu.regimes[static_cast<std::size_t>(b)]);
    }
    const auto order_mu = lexicographic_order(mus);
    const auto order_nu = lexicographic_order(nus);
    std::vector<double> paired(static_cast<std::size_t>(size));
    for (long i = 0; i < size; ++i) {
        paired[static_cast<std::size_t>(i)] =
            pair_cost(mus, order_mu[static_cast<std::size_t>(i)], nus,
                      order_nu[static_cast<std::size_t>(i)], p);
    }
    out.comonotone_bound = numerics::pairwise_sum(paired) / static_cast<double>(size);
    return out;
}

EmpiricalMeasure invariant_sample(const model::HybridModel& model,
                                  const scheme::SchemeConfig& config,
                                  const InvariantOptions& options, std::uint64_t seed,
                                  int workers) {
    if (config.variant != scheme::Variant::truncated_measure) {
        throw ConfigError("invariant_sample: requires the measure-variant scheme");
    }
    if (options.samples < 1) throw ConfigError("invariant_sample: need at least one sample");
    const scheme::Plan plan = scheme::prepare(model, config);
    const int n = model.n;
    const long count = options.samples;

    std::vector<double> xs(static_cast<std::size_t>(count) * n);
    std::vector<int> regimes(static_cast<std::size_t>(count));

    if (options.mode == InvariantOptions::Mode::across_paths) {
        mc::parallel_paths(count, workers, [&](long j) {
            rng::Stream stream =
                rng::Stream::derive(seed, {kTagInvariant, static_cast<std::uint64_t>(j)});
            const auto res = scheme::run_path(model, config, stream);
            if (!res.ok()) {
                std::ostringstream os;
                os << "invariant_sample: path " << j << " diverged at step "
                   << res.diverged_at;
                throw NumericalError(os.str());
            }
            for (int c = 0; c < n; ++c) {
                xs[static_cast<std::size_t>(j) * n + c] = res.terminal(c);
            }
            regimes[static_cast<std::size_t>(j)] = res.terminal_regime;
        });
        return EmpiricalMeasure::uniform(n, std::move(xs), std::move(regimes));
    }

    const double burn_in = options.burn_in < 0.0 ? config.horizon / 2.0 : options.burn_in;
    const long stride = std::max(1L, options.thinning);
    const long k_start = static_cast<long>(std::ceil(burn_in / config.delta - 1e-9));
    const long k_last = k_start + (count - 1) * stride;
    if (k_start < 0 || k_last > plan.steps) {
        throw ConfigError(
            "invariant_sample: horizon too short for the requested burn-in, count and thinning");
    }

    rng::Stream stream = rng::Stream::derive(seed, {kTagInvariant, 0});
    long filled = 0;
    if (k_start == 0) {
        for (int c = 0; c < n; ++c) xs[static_cast<std::size_t>(c)] = config.x0(c);
        regimes[0] = config.r0;
        filled = 1;
    }
    scheme::StepObserver observer = [&](long k, double, int r, std::span<const double> y) {
        if (filled < count && k == k_start + filled * stride) {
            for (int c = 0; c < n; ++c) {
                xs[static_cast<std::size_t>(filled) * n + c] = y[static_cast<std::size_t>(c)];
            }
            regimes[static_cast<std::size_t>(filled)] = r;
            ++filled;
        }
    };
    const auto res = scheme::run_path(model, config, stream, &observer);
    if (!res.ok()) {
        std::ostringstream os;
        os << "invariant_sample: the chain diverged at step " << res.diverged_at;
        throw NumericalError(os.str());
    }
    return EmpiricalMeasure::uniform(n, std::move(xs), std::move(regimes));
}

DensityGrid density_grid(const EmpiricalMeasure& mu, double x_lo, double x_hi, double y_lo,
                         double y_hi, int bins_x, int bins_y) {
    mu.validate();
    if (mu.n != 2) throw ConfigError("density_grid: requires a 2-D state");
    if (!(x_hi > x_lo) || !(y_hi > y_lo)) throw ConfigError("density_grid: empty bounds");
    if (bins_x < 1 || bins_y < 1) throw ConfigError("density_grid: need at least one bin");

    DensityGrid grid;
    grid.x_lo = x_lo;
    grid.x_hi = x_hi;
    grid.y_lo = y_lo;
    grid.y_hi = y_hi;
    grid.bins_x = bins_x;
    grid.bins_y = bins_y;
    grid.density.assign(static_cast<std::size_t>(bins_x) * bins_y, 0.0);

    const double wx = (x_hi - x_lo) / bins_x;
    const double wy = (y_hi - y_lo) / bins_y;
    double total = 0.0;
    for (long i = 0; i < mu.count(); ++i) {
        const auto pt = mu.point(i);
        if (pt[0] < x_lo || pt[0] > x_hi || pt[1] < y_lo || pt[1] > y_hi) continue;
        int ix = static_cast<int>((pt[0] - x_lo) / wx);
        int iy = static_cast<int>((pt[1] - y_lo) / wy);
        ix = std::min(ix, bins_x - 1);
        iy = std::min(iy, bins_y - 1);
        grid.density[static_cast<std::size_t>(ix) * bins_y + iy] +=
            mu.weights[static_cast<std::size_t>(i)];
        total += mu.weights[static_cast<std::size_t>(i)];
    }
    if (total <= 0.0) throw ConfigError("density_grid: no samples inside the bounds");
    const double scale = 1.0 / (total * wx * wy);
    for (double& v : grid.density) v *= scale;
    return grid;
}

} // namespace sds::measure
