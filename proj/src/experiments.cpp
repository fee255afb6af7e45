#include "sdsim/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "sdsim/assumptions.hpp"
#include "sdsim/csvio.hpp"
#include "sdsim/errors.hpp"
#include "sdsim/markov.hpp"
#include "sdsim/measure.hpp"
#include "sdsim/model_dsl.hpp"
#include "sdsim/montecarlo.hpp"
#include "sdsim/svgplot.hpp"

namespace fs = std::filesystem;

namespace sds::experiments {

namespace {

using config::ExperimentConfig;
using config::format_delta;
using config::format_number;

scheme::Variant parse_variant(const std::string& name) {
    if (name == "plain-em") return scheme::Variant::plain_em;
    if (name == "truncated-finite") return scheme::Variant::truncated_finite;
    if (name == "truncated-measure") return scheme::Variant::truncated_measure;
    if (name == "backward-em-cubic") return scheme::Variant::backward_em_cubic;
    throw ConfigError("unknown scheme variant '" + name + "'");
}

std::vector<double> dyadic_range(int coarse_k, int fine_k) {
    std::vector<double> out;
    for (int k = coarse_k; k <= fine_k; ++k) out.push_back(std::ldexp(1.0, -k));
    return out;
}

std::string path_in(const ExperimentConfig& cfg, const std::string& file) {
    return (fs::path(cfg.out_dir) / file).string();
}

/// Common [scheme] resolution against the model preset. Experiment-specific
/// defaults (delta, horizon) are already filled into cfg by the caller;
/// resolved values are written back so the manifest records them.
scheme::SchemeConfig base_scheme(ExperimentConfig& cfg, const LoadedModel& loaded) {
    scheme::SchemeConfig sc;
    sc.variant = parse_variant(cfg.variant);
    sc.delta = cfg.delta;
    sc.horizon = cfg.horizon;
    if (cfg.x0.empty()) {
        if (!loaded.is_builtin)
            throw ConfigError("model file gives no default x0; set [scheme] x0");
        cfg.x0.assign(loaded.preset.x0.data(),
                      loaded.preset.x0.data() + loaded.preset.x0.size());
    }
    sc.x0 = Eigen::Map<const Eigen::VectorXd>(cfg.x0.data(),
                                              static_cast<long>(cfg.x0.size()));
    if (cfg.r0 < 0) cfg.r0 = loaded.is_builtin ? loaded.preset.r0 : 0;
    sc.r0 = cfg.r0;
    if (loaded.is_builtin && loaded.preset.scalar_cubic) {
        sc.cubic_a = loaded.preset.a;
        sc.cubic_b = loaded.preset.b;
        sc.cubic_sigma = loaded.preset.sigma;
    }
    return sc;
}

std::string manifest_text(const ExperimentConfig& cfg, const RunOptions& options) {
    std::ostringstream out;
    out << "# sdsim " << kVersion << "\n";
    out << "# workers = " << options.workers << "\n";
    out << "# paper-scale = " << (options.paper_scale ? "on" : "off") << "\n";
    out << config::serialize(cfg);
    return out.str();
}

std::string rate_report(const mc::RateFit& fit, const mc::ErrorTable& table) {
    std::ostringstream out;
    out << "slope = " << format_number(fit.slope) << "\n";
    out << "intercept = " << format_number(fit.intercept) << "\n";
    out << "residual_rms = " << format_number(fit.residual_rms) << "\n";
    out << "used_rows = " << fit.used_rows << "\n";
    out << "reference_diverged = " << table.reference_diverged << "\n";
    for (const auto& w : fit.warnings) out << "warning = " << w << "\n";
    return out.str();
}

void write_convergence_artifacts(const ExperimentConfig& cfg, const mc::ErrorTable& table) {
    std::ostringstream errors_csv;
    io::write_error_table_csv(errors_csv, table);
    io::write_file(path_in(cfg, "errors.csv"), errors_csv.str());

    const auto fit = mc::fit_rate(table);
    io::write_file(path_in(cfg, "rate.txt"), rate_report(fit, table));

    if (cfg.svg) {
        plot::Series errs;
        errs.label = "measured error";
        for (const auto& row : table.rows)
            if (row.error > 0.0) errs.points.push_back({row.delta, row.error});
        const std::string svg =
            plot::chart("strong error vs step size", "step size", "error", {errs},
                        true, true, 0.5);
        io::write_file(path_in(cfg, "convergence.svg"), svg);
    }
    std::cout << "fitted slope " << format_number(fit.slope) << " over " << fit.used_rows
              << " step sizes\n";
}

void run_simulate(ExperimentConfig& cfg, const LoadedModel& loaded, const RunOptions& options) {
    if (!(cfg.delta > 0.0)) throw ConfigError("simulate needs [scheme] delta");
    if (cfg.horizon < 0.0)
        cfg.horizon = loaded.is_builtin ? loaded.preset.horizon_convergence : 1.0;
    const auto sc = base_scheme(cfg, loaded);
    rng::Stream stream(*cfg.seed);
    const auto path = scheme::simulate(loaded.model, sc, stream);

    const bool pre = sc.variant == scheme::Variant::truncated_finite ||
                     sc.variant == scheme::Variant::truncated_measure;
    std::ostringstream csv;
    io::write_path_csv(csv, path, pre);
    io::write_file(path_in(cfg, "path.csv"), csv.str());

    if (cfg.svg) {
        const std::size_t rows = path.times.size();
        const std::size_t n = path.y.size() / rows;
        std::vector<plot::Series> series(n);
        for (std::size_t c = 0; c < n; ++c) {
            series[c].label = "y" + std::to_string(c + 1);
            for (std::size_t k = 0; k < rows; ++k)
                series[c].points.push_back({path.times[k], path.y[k * n + c]});
        }
        io::write_file(path_in(cfg, "trajectory.svg"),
                       plot::chart("simulated path", "t", "state", series, false, false));
    }
    if (path.ok())
        std::cout << "path of " << path.times.size() - 1 << " steps written\n";
    else
        std::cout << "path diverged at step " << path.diverged_at << "\n";
    io::write_file(path_in(cfg, "manifest.txt"), manifest_text(cfg, options));
}

void run_convergence(ExperimentConfig& cfg, const LoadedModel& loaded,
                     const RunOptions& options, bool exact_reference) {
    if (cfg.deltas.empty())
        cfg.deltas = exact_reference ? dyadic_range(10, options.paper_scale ? 19 : 15)
                                     : dyadic_range(6, options.paper_scale ? 13 : 11);
    if (options.paper_scale) cfg.paths = std::max(cfg.paths, 1000L);
    if (cfg.horizon < 0.0)
        cfg.horizon = loaded.is_builtin ? loaded.preset.horizon_convergence : 1.0;
    mc::Reference ref;
    if (exact_reference) {
        if (!loaded.is_builtin || !loaded.preset.scalar_cubic)
            throw ConfigError(
                "the closed-form reference needs a built-in scalar cubic model");
        ref = mc::Reference::closed_form();
        cfg.delta_ref = 0.0;
    } else {
        if (cfg.delta_ref <= 0.0)
            cfg.delta_ref = cfg.deltas.back() / (options.paper_scale ? 16.0 : 8.0);
        ref = mc::Reference::fine_step(cfg.delta_ref);
    }
    cfg.delta = cfg.deltas.front();
    auto sc = base_scheme(cfg, loaded);
    const auto table = mc::strong_error(loaded.model, sc, ref, cfg.deltas, cfg.q,
                                        cfg.paths, *cfg.seed, options.workers);
    write_convergence_artifacts(cfg, table);
    io::write_file(path_in(cfg, "manifest.txt"), manifest_text(cfg, options));
}

void run_invariant(ExperimentConfig& cfg, const LoadedModel& loaded,
                   const RunOptions& options) {
    if (!(cfg.delta > 0.0)) cfg.delta = std::ldexp(1.0, -9);
    if (cfg.delta_ref <= 0.0) cfg.delta_ref = cfg.delta / 16.0;
    if (cfg.horizon < 0.0)
        cfg.horizon = loaded.is_builtin ? loaded.preset.horizon_invariant : 100.0;
    if (options.paper_scale) cfg.samples = std::max(cfg.samples, 1000L);

    measure::InvariantOptions opts;
    opts.mode = cfg.mode == "along-path" ? measure::InvariantOptions::Mode::along_path
                                         : measure::InvariantOptions::Mode::across_paths;
    opts.burn_in = cfg.burn_in;
    opts.samples = cfg.samples;
    opts.thinning = cfg.thinning;

    auto sc = base_scheme(cfg, loaded);
    const auto coarse = measure::invariant_sample(loaded.model, sc, opts, *cfg.seed,
                                                  options.workers);
    sc.delta = cfg.delta_ref;
    // the finer ensemble uses the next master seed so the two are independent
    const auto fine = measure::invariant_sample(loaded.model, sc, opts, *cfg.seed + 1,
                                                options.workers);

    std::ostringstream mc_csv, mf_csv;
    io::write_measure_csv(mc_csv, coarse);
    io::write_measure_csv(mf_csv, fine);
    io::write_file(path_in(cfg, "measure_coarse.csv"), mc_csv.str());
    io::write_file(path_in(cfg, "measure_fine.csv"), mf_csv.str());

    std::ostringstream ks_csv;
    ks_csv << "component,statistic,critical,alpha,reject\n";
    for (int c = 0; c < coarse.n; ++c) {
        const auto xc = measure::component(coarse, c);
        const auto xf = measure::component(fine, c);
        const auto ks = measure::ks_two_sample(xc, xf, cfg.alpha);
        ks_csv << c + 1 << ',' << format_number(ks.statistic) << ','
               << format_number(ks.critical) << ',' << format_number(cfg.alpha) << ','
               << (ks.reject ? 1 : 0) << "\n";
        std::cout << "component " << c + 1 << ": KS statistic "
                  << format_number(ks.statistic) << (ks.reject ? " (rejected)" : "")
                  << "\n";

        std::ostringstream ec, ef;
        io::write_ecdf_csv(ec, xc);
        io::write_ecdf_csv(ef, xf);
        const std::string tag = "x" + std::to_string(c + 1);
        io::write_file(path_in(cfg, "ecdf_" + tag + "_coarse.csv"), ec.str());
        io::write_file(path_in(cfg, "ecdf_" + tag + "_fine.csv"), ef.str());
        if (cfg.svg) {
            auto curve = [](std::vector<double> vals, const std::string& label) {
                std::sort(vals.begin(), vals.end());
                plot::Series s;
                s.label = label;
                const double n = static_cast<double>(vals.size());
                for (std::size_t i = 0; i < vals.size(); ++i)
                    s.points.push_back({vals[i], static_cast<double>(i + 1) / n});
                return s;
            };
            const std::string svg = plot::chart(
                "empirical distribution of " + tag, tag, "cdf",
                {curve(xc, "coarse step"), curve(xf, "fine step")}, false, false);
            io::write_file(path_in(cfg, "ecdf_" + tag + ".svg"), svg);
        }
    }
    io::write_file(path_in(cfg, "ks.csv"), ks_csv.str());

    std::ostringstream wout;
    if (cfg.p > 1.0) {
        wout << "skipped: transport order p must lie in (0,1], got "
             << format_number(cfg.p) << "\n";
    } else if (cfg.samples > 2000) {
        wout << "skipped: exact assignment is limited to 2000 atoms per side\n";
    } else {
        const auto w = measure::wasserstein_p(coarse, fine, cfg.p);
        wout << "p = " << format_number(cfg.p) << "\n";
        wout << "distance = " << format_number(w.distance) << "\n";
        wout << "comonotone_bound = " << format_number(w.comonotone_bound) << "\n";
        wout << "support = " << w.support << "\n";
        std::cout << "transport distance " << format_number(w.distance) << " on "
                  << w.support << " atoms per side\n";
    }
    io::write_file(path_in(cfg, "wasserstein.txt"), wout.str());
    io::write_file(path_in(cfg, "manifest.txt"), manifest_text(cfg, options));
}

void run_stability(ExperimentConfig& cfg, const LoadedModel& loaded,
                   const RunOptions& options) {
    if (!(cfg.delta > 0.0)) cfg.delta = std::ldexp(1.0, -10);
    if (cfg.horizon < 0.0)
        cfg.horizon = loaded.is_builtin ? loaded.preset.horizon_invariant : 100.0;
    if (options.paper_scale) cfg.paths = std::max(cfg.paths, 1000L);
    const auto sc = base_scheme(cfg, loaded);
    const auto res = mc::lyapunov_estimate(loaded.model, sc, cfg.paths, *cfg.seed,
                                           options.workers);

    std::ostringstream csv;
    csv << "path,estimate\n";
    for (std::size_t j = 0; j < res.per_path.size(); ++j)
        csv << j << ',' << format_number(res.per_path[j]) << "\n";
    io::write_file(path_in(cfg, "lyapunov.csv"), csv.str());

    std::ostringstream rep;
    rep << "mean = " << format_number(res.mean) << "\n";
    rep << "std_error = " << format_number(res.std_error) << "\n";
    rep << "paths = " << res.per_path.size() << "\n";
    rep << "zero_paths = " << res.zero_paths << "\n";
    rep << "diverged = " << res.diverged << "\n";
    rep << "degenerate = " << (res.degenerate ? "yes" : "no") << "\n";
    io::write_file(path_in(cfg, "stability.txt"), rep.str());
    std::cout << "exponent estimate " << format_number(res.mean) << " +/- "
              << format_number(res.std_error) << "\n";
    io::write_file(path_in(cfg, "manifest.txt"), manifest_text(cfg, options));
}

void append_report(std::ostringstream& out, const char* name,
                   const model::AssumptionReport& rep) {
    out << "[" << name << "]\n";
    out << "order = " << format_number(rep.order) << "\n";
    out << "samples = " << rep.samples << "\n";
    for (std::size_t i = 0; i < rep.fitted.size(); ++i)
        out << "fitted_" << i + 1 << " = " << format_number(rep.fitted[i]) << "\n";
    for (std::size_t i = 0; i < rep.declared.size(); ++i)
        out << "declared_" << i + 1 << " = " << format_number(rep.declared[i]) << "\n";
    if (!rep.declared.empty())
        out << "margin = " << format_number(rep.margin) << "\n";
    out << "pi_dot = " << format_number(rep.pi_dot) << "\n\n";
}

void run_check_assumptions(ExperimentConfig& cfg, const LoadedModel& loaded,
                           const RunOptions& options) {
    const long budget = options.paper_scale ? 20000 : 4000;
    const auto& m = loaded.model;
    m.generator.validate();

    std::ostringstream out;
    out << "model = " << m.name << "\n";
    out << "dimensions = " << m.n << "\n";
    out << "regimes = " << m.m << "\n";
    const auto pi = markov::stationary_distribution(m.generator);
    out << "stationary =";
    for (int i = 0; i < pi.pi.size(); ++i) out << ' ' << format_number(pi.pi(i));
    out << "\n\n";

    std::vector<Eigen::MatrixXd> q;
    double p_bar = cfg.p, rho = cfg.p;
    std::vector<double> alpha_decl, beta_decl;
    if (loaded.is_builtin) {
        q = loaded.preset.q_matrices;
        p_bar = loaded.preset.p_bar;
        rho = loaded.preset.rho;
        alpha_decl = loaded.preset.alpha_declared;
        beta_decl = loaded.preset.beta_declared;
    } else {
        q = {Eigen::MatrixXd::Identity(m.n, m.n)};
    }
    const auto moment = model::check_moment_condition(m, q, p_bar, budget, alpha_decl,
                                                      *cfg.seed);
    append_report(out, "moment-bound", moment);
    const auto contraction =
        model::check_contraction_condition(m, rho, budget, beta_decl, *cfg.seed + 1);
    append_report(out, "contraction", contraction);

    io::write_file(path_in(cfg, "assumptions.txt"), out.str());
    std::cout << "moment-bound margin "
              << (moment.declared.empty() ? std::string("n/a")
                                          : format_number(moment.margin))
              << ", contraction margin "
              << (contraction.declared.empty() ? std::string("n/a")
                                               : format_number(contraction.margin))
              << "\n";
    io::write_file(path_in(cfg, "manifest.txt"), manifest_text(cfg, options));
}

} // namespace

LoadedModel load_model(const config::ExperimentConfig& cfg) {
    LoadedModel loaded;
    const auto names = model::builtin_names();
    if (std::find(names.begin(), names.end(), cfg.model) != names.end()) {
        loaded.preset = model::make_builtin(cfg.model, cfg.gamma);
        loaded.model = loaded.preset.model;
        loaded.is_builtin = true;
        return loaded;
    }
    if (!fs::exists(cfg.model))
        throw ConfigError("model '" + cfg.model +
                          "' is neither a built-in nor an existing file");
    std::ifstream in(cfg.model);
    std::ostringstream buf;
    buf << in.rdbuf();
    loaded.model = model::parse_model(buf.str(), fs::path(cfg.model).stem().string());
    return loaded;
}

std::string describe_models() {
    std::ostringstream out;
    out << "volatility31      2-D, 2 regimes: superlinear mean-repelling regime 1,\n"
           "                  mean-reverting regime 2; Gamma = [[-4,4],[0.2,-0.2]],\n"
           "                  x0 = (1,1), starts in regime 2.\n"
           "ginzburg32        scalar cubic, 2 regimes: a = (1,0.5), b = (-1,-1),\n"
           "                  sigma = (2,1), rates 1 and 4, x0 = 20; admits the\n"
           "                  implicit cubic stepper and the closed-form reference.\n"
           "ginzburg53        scalar cubic, 2 regimes: a = (1,2), b = (-1,0),\n"
           "                  sigma = (2,-1), x0 = 0.5; the rate out of regime 1 is\n"
           "                  the gamma knob (default 1.5).\n"
           "\n"
           "A model description file can be used instead of a built-in: set\n"
           "[model] name = <path> in the config. The file declares n/d/m, a\n"
           "[generator] section, per-regime drift/diffusion expressions and\n"
           "optional [envelope] sections (phi = auto fits one by sampling).\n"
           "Declared envelopes enable the truncated-finite variant with a\n"
           "default step control; the measure variant needs a built-in model.\n";
    return out.str();
}

void run(const RunOptions& options) {
    ExperimentConfig cfg = options.cfg;
    config::validate(cfg);
    const LoadedModel loaded = load_model(cfg);
    if (cfg.variant.empty())
        cfg.variant = cfg.kind == "invariant" ? "truncated-measure" : "truncated-finite";
    if (cfg.q == 0) {
        if (loaded.is_builtin) cfg.q = loaded.preset.error_power;
        else cfg.q = cfg.kind == "convergence-exact" ? 2 : 1;
    }
    std::error_code ec;
    fs::create_directories(cfg.out_dir, ec);
    if (ec) throw ConfigError("cannot create output directory '" + cfg.out_dir + "'");

    if (cfg.kind == "simulate") {
        run_simulate(cfg, loaded, options);
    } else if (cfg.kind == "convergence") {
        run_convergence(cfg, loaded, options, false);
    } else if (cfg.kind == "convergence-exact") {
        run_convergence(cfg, loaded, options, true);
    } else if (cfg.kind == "invariant") {
        run_invariant(cfg, loaded, options);
    } else if (cfg.kind == "stability") {
        run_stability(cfg, loaded, options);
    } else if (cfg.kind == "check-assumptions") {
        run_check_assumptions(cfg, loaded, options);
    } else {
        throw ConfigError("unknown experiment kind '" + cfg.kind + "'");
    }
}

} // namespace sds::experiments
