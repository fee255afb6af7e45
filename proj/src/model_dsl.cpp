#include "sdsim/model_dsl.hpp"

#include <cctype>
#include <cmath>
#include <memory>
#include <sstream>
#include <vector>

#include "sdsim/errors.hpp"
#include "sdsim/expr.hpp"

namespace sds::model {

namespace {

std::string_view trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

[[noreturn]] void fail(int line, const std::string& message) {
    std::ostringstream os;
    os << "line " << line << ": " << message;
    throw ConfigError(os.str());
}

/// Parses "name[i]" or "name[i][j]"; returns indices (1-based as written).
struct IndexedKey {
    std::string name;
    std::vector<int> indices;
};

IndexedKey parse_key(std::string_view key, int line) {
    IndexedKey out;
    std::size_t p = 0;
    while (p < key.size() && key[p] != '[') ++p;
    out.name = std::string(trim(key.substr(0, p)));
    while (p < key.size()) {
        if (key[p] != '[') fail(line, "malformed key '" + std::string(key) + "'");
        const std::size_t close = key.find(']', p);
        if (close == std::string_view::npos) {
            fail(line, "missing ']' in key '" + std::string(key) + "'");
        }
        const std::string idx(trim(key.substr(p + 1, close - p - 1)));
        try {
            std::size_t used = 0;
            const int v = std::stoi(idx, &used);
            if (used != idx.size()) throw std::invalid_argument(idx);
            out.indices.push_back(v);
        } catch (const std::exception&) {
            fail(line, "index '" + idx + "' is not an integer");
        }
        p = close + 1;
    }
    return out;
}

struct EnvelopeSpec {
    bool declared = false;
    bool automatic = false;
    expr::Expression phi;
    int line = 0;
};

} // namespace

HybridModel parse_model(std::string_view text, std::string name) {
    int n = 0, d = 0, m = 0;
    enum class Where { header, generator, regime, envelope };
    Where where = Where::header;
    int current = -1;  // 0-based regime index of the active section

    std::vector<std::vector<expr::Expression>> drift_exprs, diff_exprs;
    std::vector<std::vector<bool>> drift_set, diff_set;
    std::vector<EnvelopeSpec> env_specs;
    Eigen::MatrixXd rates;
    bool has_generator = false;
    std::vector<std::string> var_names;

    auto require_dims = [&](int line) {
        if (n <= 0 || d <= 0 || m <= 0) {
            fail(line, "declare n, d and m before any section");
        }
        if (drift_exprs.empty()) {
            var_names.resize(static_cast<std::size_t>(n));
            for (int k = 0; k < n; ++k) var_names[k] = "x" + std::to_string(k + 1);
            const auto zero = expr::parse_expression("0", var_names, true);
            drift_exprs.assign(m, std::vector<expr::Expression>(n, zero));
            diff_exprs.assign(m, std::vector<expr::Expression>(
                                     static_cast<std::size_t>(n) * d, zero));
            drift_set.assign(m, std::vector<bool>(n, false));
            diff_set.assign(m, std::vector<bool>(static_cast<std::size_t>(n) * d, false));
            env_specs.assign(m, {});
            rates = Eigen::MatrixXd::Zero(m, m);
        }
    };

    int line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t nl = text.find('\n', start);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view raw = text.substr(start, nl - start);
        const std::size_t line_begin = start;
        start = nl + 1;
        ++line_no;

        const std::size_t hash = raw.find('#');
        if (hash != std::string_view::npos) raw = raw.substr(0, hash);
        const std::string_view body = trim(raw);
        if (body.empty()) continue;

        if (body.front() == '[') {
            if (body.back() != ']') fail(line_no, "unterminated section header");
            const std::string_view inner = trim(body.substr(1, body.size() - 2));
            if (inner == "generator") {
                require_dims(line_no);
                where = Where::generator;
                has_generator = true;
                continue;
            }
            std::istringstream is{std::string(inner)};
            std::string kind;
            int idx = 0;
            is >> kind >> idx;
            if (is.fail() || (kind != "regime" && kind != "envelope")) {
                fail(line_no, "unknown section '" + std::string(inner) + "'");
            }
            require_dims(line_no);
            if (idx < 1 || idx > m) {
                fail(line_no, kind + " index " + std::to_string(idx) +
                                  " is out of range 1.." + std::to_string(m));
            }
            current = idx - 1;
            where = (kind == "regime") ? Where::regime : Where::envelope;
            continue;
        }

        const std::size_t eq = body.find('=');
        if (eq == std::string_view::npos) fail(line_no, "expected 'key = value'");
        const IndexedKey key = parse_key(trim(body.substr(0, eq)), line_no);
        const std::string_view value = trim(body.substr(eq + 1));
        // column of the value within the original line, for expression errors
        const int col_offset = static_cast<int>(value.data() - (text.data() + line_begin));

        if (where == Where::header) {
            if (key.indices.empty() &&
                (key.name == "n" || key.name == "d" || key.name == "m")) {
                int parsed = 0;
                try {
                    parsed = std::stoi(std::string(value));
                } catch (const std::exception&) {
                    fail(line_no, "dimension '" + key.name + "' must be an integer");
                }
                if (parsed < 1) fail(line_no, "dimension '" + key.name + "' must be >= 1");
                if (key.name == "n") n = parsed;
                if (key.name == "d") d = parsed;
                if (key.name == "m") m = parsed;
                continue;
            }
            fail(line_no, "expected n=, d= or m= before the first section");
        }

        if (where == Where::generator) {
            if (key.name != "g" || key.indices.size() != 2) {
                fail(line_no, "generator section expects g[i][j] = rate");
            }
            const int i = key.indices[0], j = key.indices[1];
            if (i < 1 || i > m || j < 1 || j > m) {
                fail(line_no, "generator index out of range 1.." + std::to_string(m));
            }
            if (i == j) fail(line_no, "declare only off-diagonal rates; diagonals are derived");
            double rate = 0.0;
            try {
                rate = std::stod(std::string(value));
            } catch (const std::exception&) {
                fail(line_no, "rate must be a number");
            }
            if (rate < 0.0) fail(line_no, "off-diagonal rates must be nonnegative");
            rates(i - 1, j - 1) = rate;
            continue;
        }

        if (where == Where::regime) {
            if (key.name == "drift" && key.indices.size() == 1) {
                const int k = key.indices[0];
                if (k < 1 || k > n) {
                    fail(line_no, "drift index " + std::to_string(k) +
                                      " exceeds the state dimension n=" + std::to_string(n));
                }
                if (drift_set[current][k - 1]) {
                    fail(line_no, "duplicate drift[" + std::to_string(k) + "]");
                }
                drift_exprs[current][k - 1] =
                    expr::parse_expression(value, var_names, true, line_no, col_offset);
                drift_set[current][k - 1] = true;
                continue;
            }
            if (key.name == "diff" && key.indices.size() == 2) {
                const int k = key.indices[0], l = key.indices[1];
                if (k < 1 || k > n) {
                    fail(line_no, "diff row " + std::to_string(k) +
                                      " exceeds the state dimension n=" + std::to_string(n));
                }
                if (l < 1 || l > d) {
                    fail(line_no, "diff column " + std::to_string(l) +
                                      " exceeds the noise dimension d=" + std::to_string(d));
                }
                const std::size_t flat = static_cast<std::size_t>(k - 1) * d + (l - 1);
                if (diff_set[current][flat]) {
                    fail(line_no, "duplicate diff[" + std::to_string(k) + "][" +
                                      std::to_string(l) + "]");
                }
                diff_exprs[current][flat] =
                    expr::parse_expression(value, var_names, true, line_no, col_offset);
                diff_set[current][flat] = true;
                continue;
            }
            fail(line_no, "regime section expects drift[k] = expr or diff[k][l] = expr");
        }

        // envelope section
        if (key.name != "phi" || !key.indices.empty()) {
            fail(line_no, "envelope section expects phi = expr (in u) or phi = auto");
        }
        EnvelopeSpec& spec = env_specs[current];
        if (spec.declared) fail(line_no, "duplicate phi for this envelope");
        spec.declared = true;
        spec.line = line_no;
        if (value == "auto") {
            spec.automatic = true;
        } else {
            const std::string uvar[] = {"u"};
            spec.phi = expr::parse_expression(value, uvar, false, line_no, col_offset);
        }
    }

    if (n <= 0 || d <= 0 || m <= 0) fail(line_no, "missing dimension declarations n, d, m");
    require_dims(line_no);

    if (!has_generator && m > 1) {
        throw ConfigError("model declares m=" + std::to_string(m) +
                          " regimes but no [generator] section");
    }
    for (int i = 0; i < m; ++i) rates(i, i) = -rates.row(i).sum();
    markov::GeneratorMatrix generator(m, rates);

    HybridModel model;
    model.name = std::move(name);
    model.n = n;
    model.d = d;
    model.m = m;
    model.generator = std::move(generator);

    auto drifts = std::make_shared<std::vector<std::vector<expr::Expression>>>(
        std::move(drift_exprs));
    auto diffs = std::make_shared<std::vector<std::vector<expr::Expression>>>(
        std::move(diff_exprs));
    model.drift = [drifts](std::span<const double> x, int regime, std::span<double> out) {
        const auto& row = (*drifts)[static_cast<std::size_t>(regime)];
        for (std::size_t k = 0; k < row.size(); ++k) out[k] = row[k].eval(x);
    };
    model.diffusion = [diffs](std::span<const double> x, int regime, std::span<double> out) {
        const auto& row = (*diffs)[static_cast<std::size_t>(regime)];
        for (std::size_t k = 0; k < row.size(); ++k) out[k] = row[k].eval(x);
    };

    bool any_declared = false, any_auto = false;
    for (const auto& spec : env_specs) {
        any_declared |= spec.declared;
        any_auto |= spec.declared && spec.automatic;
    }
    if (any_declared) {
        for (int i = 0; i < m; ++i) {
            if (!env_specs[i].declared) {
                throw ConfigError("envelope declared for some regimes but missing for regime " +
                                  std::to_string(i + 1));
            }
        }
        EnvelopeSet set;
        set.kind = EnvelopeKind::growth;
        if (any_auto) {
            std::vector<double> grid;
            for (int j = 0; j <= 28; ++j) grid.push_back(std::pow(10.0, j / 7.0));
            set = envelope_from_samples(model, EnvelopeKind::growth, grid);
        } else {
            set.per_regime.resize(m);
        }
        for (int i = 0; i < m; ++i) {
            const EnvelopeSpec& spec = env_specs[i];
            if (spec.automatic) continue;
            auto phi = std::make_shared<expr::Expression>(spec.phi);
            Envelope env;
            env.phi = [phi](double u) {
                const double vars[] = {u};
                return phi->eval(vars);
            };
            env.is_constant = !phi->depends_on_variables();
            if (!env.is_constant) {
                double prev = env.phi(1.0);
                if (!(prev > 0.0)) {
                    fail(spec.line, "envelope phi(1) must be positive");
                }
                for (int j = 1; j <= 24; ++j) {
                    const double u = std::pow(10.0, j / 4.0);
                    const double v = env.phi(u);
                    if (!(v > prev)) {
                        fail(spec.line, "envelope phi must be strictly increasing in u");
                    }
                    prev = v;
                }
            } else if (!(env.phi(1.0) > 0.0)) {
                fail(spec.line, "envelope phi must be positive");
            }
            set.per_regime[static_cast<std::size_t>(i)] = std::move(env);
        }
        model.growth = std::move(set);

        // default step control h(delta) = c * delta^(-1/2) with
        // c = max(1, max_i phi_i(1)), so h(delta) >= phi_i(1) on (0, 1]
        StepControl sc;
        sc.variant = StepControl::Variant::plain;
        sc.exponent = 0.5;
        sc.theta = 0.0;
        double at_one = 1.0;
        for (const auto& env : model.growth->per_regime) {
            at_one = std::max(at_one, env.value(1.0));
        }
        sc.coef = at_one;
        sc.bound = at_one;
        model.control_growth = sc;
    }

    return model;
}

} // namespace sds::model
