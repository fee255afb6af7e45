#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sdsim/montecarlo.hpp"

#include <cmath>
#include <cstring>
#include <vector>

#include "sdsim/builtin_models.hpp"
#include "sdsim/errors.hpp"
#include "sdsim/rng.hpp"

using namespace sds;

namespace {

model::HybridModel trivial_model(double drift_coef, double diff_coef) {
    model::HybridModel m;
    m.name = "trivial";
    m.n = 1;
    m.d = 1;
    m.m = 1;
    m.generator = markov::GeneratorMatrix(1, Eigen::MatrixXd::Zero(1, 1));
    m.drift = [drift_coef](std::span<const double> x, int, std::span<double> out) {
        out[0] = drift_coef * x[0];
    };
    m.diffusion = [diff_coef](std::span<const double> x, int, std::span<double> out) {
        out[0] = diff_coef * x[0];
    };
    return m;
}

scheme::SchemeConfig plain_scalar_config(double delta, double horizon, double x0) {
    scheme::SchemeConfig c;
    c.variant = scheme::Variant::plain_em;
    c.delta = delta;
    c.horizon = horizon;
    c.x0 = Eigen::VectorXd::Constant(1, x0);
    c.r0 = 0;
    return c;
}

mc::ErrorTable synthetic_table(std::span<const double> deltas, double coef, double power) {
    mc::ErrorTable t;
    t.q = 2;
    for (double d : deltas) {
        mc::ErrorRow row;
        row.delta = d;
        row.error = coef * std::pow(d, power);
        row.paths = 100;
        t.rows.push_back(row);
    }
    return t;
}

} // namespace

TEST_CASE("rate fit recovers synthetic log-linear data exactly") {
    const std::vector<double> deltas{0.5, 0.25, 0.125, 0.0625, 0.03125};
    auto half = mc::fit_rate(synthetic_table(deltas, 3.0, 0.5));
    CHECK(half.slope == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(half.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    CHECK(half.residual_rms < 1e-12);
    CHECK(half.used_rows == 5);
    CHECK(half.warnings.empty());

    auto one = mc::fit_rate(synthetic_table(deltas, 0.7, 1.0));
    CHECK(one.slope == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("rate fit excludes zero rows with a warning") {
    const std::vector<double> deltas{0.5, 0.25, 0.125, 0.0625};
    auto table = synthetic_table(deltas, 2.0, 0.5);
    table.rows[1].error = 0.0;
    const auto fit = mc::fit_rate(table);
    CHECK(fit.used_rows == 3);
    REQUIRE(fit.warnings.size() == 1);
    CHECK(fit.warnings[0].find("0.25") != std::string::npos);
    CHECK(fit.slope == doctest::Approx(0.5).epsilon(1e-12));

    table.rows[0].error = 0.0;
    table.rows[2].error = 0.0;
    CHECK_THROWS_AS(mc::fit_rate(table), ConfigError);
}

TEST_CASE("identical scheme and reference give exactly zero error") {
    const auto preset = model::make_volatility31();
    scheme::SchemeConfig cfg;
    cfg.variant = scheme::Variant::truncated_finite;
    cfg.horizon = 1.0;
    cfg.x0 = preset.x0;
    cfg.r0 = preset.r0;
    const std::vector<double> deltas{1.0 / 64.0};
    const auto table = mc::strong_error(preset.model, cfg, mc::Reference::fine_step(1.0 / 64.0),
                                        deltas, 2, 25, 777);
    REQUIRE(table.rows.size() == 1);
    CHECK(table.rows[0].error == 0.0);
    CHECK(table.rows[0].std_error == 0.0);
    CHECK(table.rows[0].paths == 25);
    CHECK(table.rows[0].diverged == 0);
}

TEST_CASE("fine-step reference rejects non-nested grids") {
    const auto preset = model::make_volatility31();
    scheme::SchemeConfig cfg;
    cfg.variant = scheme::Variant::truncated_finite;
    cfg.horizon = 1.0;
    cfg.x0 = preset.x0;
    cfg.r0 = preset.r0;
    const std::vector<double> bad{0.3};
    CHECK_THROWS_AS(mc::strong_error(preset.model, cfg, mc::Reference::fine_step(1.0 / 1024.0),
                                     bad, 1, 4, 1),
                    ConfigError);
}

TEST_CASE("coupled errors shrink when the test grid is refined") {
    const auto preset = model::make_volatility31();
    scheme::SchemeConfig cfg;
    cfg.variant = scheme::Variant::truncated_finite;
    cfg.horizon = 1.0;
    cfg.x0 = preset.x0;
    cfg.r0 = preset.r0;
    const std::vector<double> deltas{1.0 / 32.0, 1.0 / 128.0};
    const auto table = mc::strong_error(preset.model, cfg, mc::Reference::fine_step(1.0 / 1024.0),
                                        deltas, 1, 50, 4242);
    REQUIRE(table.rows.size() == 2);
    CHECK(table.rows[0].paths == 50);
    CHECK(table.rows[1].paths == 50);
    CHECK(table.rows[0].error > 0.0);
    CHECK(table.rows[1].error > 0.0);
    CHECK(table.rows[0].error > table.rows[1].error);
    CHECK(table.rows[0].std_error > 0.0);
}

TEST_CASE("closed-form reference reproduces the square-root error decay") {
    const auto preset = model::make_ginzburg32();
    scheme::SchemeConfig cfg;
    cfg.variant = scheme::Variant::truncated_finite;
    cfg.horizon = preset.horizon_convergence;
    cfg.x0 = preset.x0;
    cfg.r0 = preset.r0;
    cfg.cubic_a = preset.a;
    cfg.cubic_b = preset.b;
    cfg.cubic_sigma = preset.sigma;
    // steps coarser than ~1/512 overshoot the cubic decay from x0 = 20 and
    // measure the truncation clamp instead of the scheme error
    const std::vector<double> deltas{1.0 / 1024.0, 1.0 / 4096.0, 1.0 / 16384.0};
    const auto table = mc::strong_error(preset.model, cfg, mc::Reference::closed_form(),
                                        deltas, 2, 150, 2025);
    REQUIRE(table.rows.size() == 3);
    for (const auto& row : table.rows) {
        CHECK(row.paths == 150);
        CHECK(row.error > 0.0);
    }
    CHECK(table.rows[0].error > table.rows[2].error);
    const auto fit = mc::fit_rate(table);
    CHECK(fit.slope > 0.25);
    CHECK(fit.slope < 0.8);
}

TEST_CASE("strong error output is independent of the worker count") {
    const auto preset = model::make_volatility31();
    scheme::SchemeConfig cfg;
    cfg.variant = scheme::Variant::truncated_finite;
    cfg.horizon = 1.0;
    cfg.x0 = preset.x0;
    cfg.r0 = preset.r0;
    const std::vector<double> deltas{1.0 / 16.0, 1.0 / 64.0};
    const auto ref = mc::Reference::fine_step(1.0 / 256.0);
    const auto t1 = mc::strong_error(preset.model, cfg, ref, deltas, 1, 30, 97, 1);
    const auto t3 = mc::strong_error(preset.model, cfg, ref, deltas, 1, 30, 97, 3);
    REQUIRE(t1.rows.size() == t3.rows.size());
    for (std::size_t i = 0; i < t1.rows.size(); ++i) {
        CHECK(t1.rows[i].error == t3.rows[i].error);
        CHECK(t1.rows[i].std_error == t3.rows[i].std_error);
        CHECK(t1.rows[i].paths == t3.rows[i].paths);
    }
}

TEST_CASE("quadrupling the path count roughly halves the standard error") {
    const auto preset = model::make_ginzburg32();
    scheme::SchemeConfig cfg;
    cfg.variant = scheme::Variant::truncated_finite;
    cfg.horizon = preset.horizon_convergence;
    cfg.x0 = preset.x0;
    cfg.r0 = preset.r0;
    cfg.cubic_a = preset.a;
    cfg.cubic_b = preset.b;
    cfg.cubic_sigma = preset.sigma;
    const std::vector<double> deltas{1.0 / 64.0};
    const auto small = mc::strong_error(preset.model, cfg, mc::Reference::closed_form(),
                                        deltas, 2, 300, 11);
    const auto big = mc::strong_error(preset.model, cfg, mc::Reference::closed_form(),
                                      deltas, 2, 1200, 11);
    const double ratio = small.rows[0].std_error / big.rows[0].std_error;
    CHECK(ratio > 1.4);
    CHECK(ratio < 2.6);
}

TEST_CASE("divergent plain-EM paths are counted, not averaged") {
    const auto preset = model::make_ginzburg32();
    scheme::SchemeConfig cfg;
    cfg.variant = scheme::Variant::plain_em;
    cfg.horizon = preset.horizon_convergence;
    cfg.x0 = preset.x0;
    cfg.r0 = preset.r0;
    cfg.cubic_a = preset.a;
    cfg.cubic_b = preset.b;
    cfg.cubic_sigma = preset.sigma;
    const std::vector<double> deltas{1.0 / 64.0};
    const auto table = mc::strong_error(preset.model, cfg, mc::Reference::closed_form(),
                                        deltas, 1, 20, 5);
    REQUIRE(table.rows.size() == 1);
    CHECK(table.rows[0].diverged > 10);
    CHECK(table.rows[0].paths + table.rows[0].diverged == 20);
    CHECK(std::isfinite(table.rows[0].error));
}

TEST_CASE("a divergent fine reference drops the whole path") {
    const auto preset = model::make_ginzburg32();
    scheme::SchemeConfig cfg;
    cfg.variant = scheme::Variant::plain_em;
    cfg.horizon = 1.0;
    cfg.x0 = preset.x0;
    cfg.r0 = preset.r0;
    const std::vector<double> deltas{1.0 / 16.0};
    const auto table = mc::strong_error(preset.model, cfg, mc::Reference::fine_step(1.0 / 64.0),
                                        deltas, 1, 5, 3);
    CHECK(table.reference_diverged == 5);
    CHECK(table.rows[0].paths == 0);
    CHECK(table.rows[0].diverged == 0);
    CHECK(table.rows[0].error == 0.0);
}

TEST_CASE("moment trace of a frozen model is constant") {
    auto m = trivial_model(0.0, 0.0);
    auto cfg = plain_scalar_config(0.25, 2.0, 1.5);
    const std::vector<double> times{0.0, 0.5, 1.0, 2.0};
    const auto trace = mc::moment_trace(m, cfg, 3.0, 8, times, 21);
    CHECK(trace.paths == 8);
    CHECK(trace.diverged == 0);
    REQUIRE(trace.times.size() == 4);
    const double expect = std::pow(1.5, 3.0);
    for (double v : trace.moments) CHECK(v == expect);
    for (const auto& row : trace.per_path) {
        for (double v : row) CHECK(v == expect);
    }
}

TEST_CASE("moment trace matches the deterministic decay recursion") {
    auto m = trivial_model(-1.0, 0.0);
    auto cfg = plain_scalar_config(0.125, 1.0, 2.0);
    const std::vector<double> times{0.0, 0.5, 1.0};
    const auto trace = mc::moment_trace(m, cfg, 1.0, 3, times, 4);
    REQUIRE(trace.moments.size() == 3);
    CHECK(trace.times[1] == 0.5);
    CHECK(trace.moments[0] == 2.0);
    CHECK(trace.moments[1] == doctest::Approx(2.0 * std::pow(0.875, 4)).epsilon(1e-14));
    CHECK(trace.moments[2] == doctest::Approx(2.0 * std::pow(0.875, 8)).epsilon(1e-14));
}

TEST_CASE("moment trace snaps and validates sample times") {
    auto m = trivial_model(0.0, 0.0);
    auto cfg = plain_scalar_config(0.25, 1.0, 1.0);
    const std::vector<double> snap{0.26};
    const auto trace = mc::moment_trace(m, cfg, 1.0, 2, snap, 1);
    CHECK(trace.times[0] == 0.25);
    const std::vector<double> beyond{2.0};
    CHECK_THROWS_AS(mc::moment_trace(m, cfg, 1.0, 2, beyond, 1), ConfigError);
    const std::vector<double> none{};
    CHECK_THROWS_AS(mc::moment_trace(m, cfg, 1.0, 2, none, 1), ConfigError);
    CHECK_THROWS_AS(mc::moment_trace(m, cfg, 0.0, 2, snap, 1), ConfigError);
}

TEST_CASE("moment trace is worker-count independent") {
    const auto preset = model::make_volatility31();
    scheme::SchemeConfig cfg;
    cfg.variant = scheme::Variant::truncated_measure;
    cfg.delta = 1.0 / 32.0;
    cfg.horizon = 2.0;
    cfg.x0 = preset.x0;
    cfg.r0 = preset.r0;
    const std::vector<double> times{0.5, 1.0, 1.5, 2.0};
    const auto t1 = mc::moment_trace(preset.model, cfg, 1.0, 16, times, 313, 1);
    const auto t2 = mc::moment_trace(preset.model, cfg, 1.0, 16, times, 313, 3);
    REQUIRE(t1.moments.size() == t2.moments.size());
    for (std::size_t i = 0; i < t1.moments.size(); ++i) {
        CHECK(t1.moments[i] == t2.moments[i]);
    }
    REQUIRE(t1.per_path.size() == t2.per_path.size());
    for (std::size_t j = 0; j < t1.per_path.size(); ++j) {
        CHECK(t1.per_path[j] == t2.per_path[j]);
    }
}

TEST_CASE("plain EM on the stiff cubic start loses most paths") {
    const auto preset = model::make_ginzburg32();
    scheme::SchemeConfig cfg;
    cfg.variant = scheme::Variant::plain_em;
    cfg.delta = 1.0 / 64.0;
    cfg.horizon = 2.0;
    cfg.x0 = preset.x0;
    cfg.r0 = preset.r0;
    const std::vector<double> times{0.0, 1.0, 2.0};
    try {
        const auto trace = mc::moment_trace(preset.model, cfg, 1.0, 20, times, 6);
        CHECK(trace.diverged > 10);
        CHECK(trace.paths + trace.diverged == 20);
    } catch (const NumericalError&) {
        // every path diverged: also an acceptable outcome of the contrast
    }
}

TEST_CASE("trace slope is zero for a flat trace and flags short windows") {
    auto m = trivial_model(0.0, 0.0);
    auto cfg = plain_scalar_config(0.25, 2.0, 1.5);
    const std::vector<double> times{0.0, 0.5, 1.0, 1.5, 2.0};
    const auto trace = mc::moment_trace(m, cfg, 1.0, 4, times, 9);
    const auto est = mc::trace_slope(trace, 0.5, 2.0);
    CHECK(est.slope == 0.0);
    CHECK(est.std_error == 0.0);
    CHECK(est.paths == 4);
    CHECK_THROWS_AS(mc::trace_slope(trace, 0.6, 0.9), ConfigError);
}

TEST_CASE("deterministic decay gives the expected exponential-decay estimate") {
    auto m = trivial_model(-1.0, 0.0);
    scheme::SchemeConfig cfg = plain_scalar_config(1e-3, 5.0, 1.0);
    const auto res = mc::lyapunov_estimate(m, cfg, 4, 33);
    CHECK_FALSE(res.degenerate);
    CHECK(res.zero_paths == 0);
    CHECK(res.diverged == 0);
    REQUIRE(res.per_path.size() == 4);
    const double expect = std::log(1.0 - 1e-3) / 1e-3;
    CHECK(res.mean == doctest::Approx(expect).epsilon(1e-10));
    CHECK(res.std_error == 0.0);
}

TEST_CASE("exponential-decay estimation guards its preconditions") {
    auto affine = trivial_model(0.0, 0.0);
    affine.drift = [](std::span<const double>, int, std::span<double> out) { out[0] = 1.0; };
    auto cfg = plain_scalar_config(0.01, 1.0, 1.0);
    CHECK_THROWS_AS(mc::lyapunov_estimate(affine, cfg, 2, 1), ConfigError);

    auto m = trivial_model(-1.0, 0.5);
    auto zero_start = plain_scalar_config(0.01, 1.0, 0.0);
    const auto res = mc::lyapunov_estimate(m, zero_start, 3, 1);
    CHECK(res.degenerate);
    CHECK(res.zero_paths == 3);
    CHECK(res.per_path.empty());
}

TEST_CASE("parallel path driver covers every index exactly once") {
    std::vector<int> hits(103, 0);
    mc::parallel_paths(103, 4, [&](long j) { hits[static_cast<std::size_t>(j)] += 1; });
    for (int h : hits) CHECK(h == 1);
    mc::parallel_paths(0, 4, [&](long) { FAIL("body must not run for count 0"); });
    CHECK_THROWS_AS(mc::parallel_paths(8, 3,
                                       [](long j) {
                                           if (j == 5) throw ConfigError("boom");
                                       }),
                    ConfigError);
}
