#include "sdsim/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "sdsim/errors.hpp"

namespace sds::config {

namespace {

const std::set<std::string> kKinds = {
    "simulate",      "convergence",       "convergence-exact", "invariant",
    "stability",     "check-assumptions",
};
const std::set<std::string> kVariants = {
    "plain-em", "truncated-finite", "truncated-measure", "backward-em-cubic"};
const std::set<std::string> kModes = {"across-paths", "along-path"};

std::string trim(std::string s) {
    const auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    while (!s.empty() && is_space(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
    while (!s.empty() && is_space(static_cast<unsigned char>(s.back()))) s.pop_back();
    return s;
}

[[noreturn]] void fail(int line, const std::string& what) {
    throw ConfigError("config line " + std::to_string(line) + ": " + what);
}

std::vector<std::string> split_ws(const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> out;
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

double parse_double(const std::string& s, int line) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) fail(line, "trailing characters in number '" + s + "'");
        return v;
    } catch (const std::invalid_argument&) {
        fail(line, "expected a number, got '" + s + "'");
    } catch (const std::out_of_range&) {
        fail(line, "number out of range: '" + s + "'");
    }
}

long parse_long(const std::string& s, int line) {
    try {
        std::size_t pos = 0;
        const long v = std::stol(s, &pos);
        if (pos != s.size()) fail(line, "trailing characters in integer '" + s + "'");
        return v;
    } catch (const std::invalid_argument&) {
        fail(line, "expected an integer, got '" + s + "'");
    } catch (const std::out_of_range&) {
        fail(line, "integer out of range: '" + s + "'");
    }
}

std::uint64_t parse_u64(const std::string& s, int line) {
    if (!s.empty() && s[0] == '-') fail(line, "seed must be non-negative");
    try {
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(s, &pos);
        if (pos != s.size()) fail(line, "trailing characters in seed '" + s + "'");
        return static_cast<std::uint64_t>(v);
    } catch (const std::invalid_argument&) {
        fail(line, "expected an unsigned integer, got '" + s + "'");
    } catch (const std::out_of_range&) {
        fail(line, "seed out of range: '" + s + "'");
    }
}

bool parse_bool(const std::string& s, int line) {
    if (s == "on" || s == "true" || s == "1") return true;
    if (s == "off" || s == "false" || s == "0") return false;
    fail(line, "expected on/off, got '" + s + "'");
}

double delta_token(const std::string& tok, int line) {
    try {
        return parse_delta_token(tok);
    } catch (const ConfigError& e) {
        fail(line, e.what());
    }
}

} // namespace

double parse_delta_token(const std::string& token) {
    if (token.rfind("2^", 0) == 0) {
        const std::string expo = token.substr(2);
        try {
            std::size_t pos = 0;
            const int k = std::stoi(expo, &pos);
            if (pos != expo.size()) throw std::invalid_argument("");
            if (k < -1074 || k > 1023)
                throw ConfigError("exponent out of range in '" + token + "'");
            return std::ldexp(1.0, k);
        } catch (const std::invalid_argument&) {
            throw ConfigError("malformed power-of-two token '" + token + "'");
        } catch (const std::out_of_range&) {
            throw ConfigError("exponent out of range in '" + token + "'");
        }
    }
    try {
        std::size_t pos = 0;
        const double v = std::stod(token, &pos);
        if (pos != token.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::invalid_argument&) {
        throw ConfigError("expected a step size, got '" + token + "'");
    } catch (const std::out_of_range&) {
        throw ConfigError("step size out of range: '" + token + "'");
    }
}

std::string format_number(double value) {
    char buf[40];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, value);
        if (std::stod(buf) == value) break;
    }
    return buf;
}

std::string format_delta(double value) {
    int k = 0;
    const double mant = std::frexp(value, &k);
    if (value > 0.0 && mant == 0.5) return "2^" + std::to_string(k - 1);
    return format_number(value);
}

ExperimentConfig parse_string(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    std::set<std::string> seen;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        const std::string s = trim(raw);
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') fail(line, "unterminated section header");
            section = s.substr(1, s.size() - 2);
            if (section != "experiment" && section != "model" && section != "scheme" &&
                section != "output")
                fail(line, "unknown section [" + section + "]");
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) fail(line, "expected key = value");
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        if (key.empty()) fail(line, "empty key");
        if (section.empty()) fail(line, "key '" + key + "' before any section");
        const std::string qualified = section + "." + key;
        if (!seen.insert(qualified).second) fail(line, "duplicate key '" + qualified + "'");

        if (section == "experiment") {
            if (key == "kind") {
                cfg.kind = value;
            } else if (key == "paths") {
                cfg.paths = parse_long(value, line);
            } else if (key == "deltas") {
                cfg.deltas.clear();
                for (const auto& tok : split_ws(value)) cfg.deltas.push_back(delta_token(tok, line));
                if (cfg.deltas.empty()) fail(line, "deltas needs at least one value");
            } else if (key == "delta_ref") {
                cfg.delta_ref = delta_token(value, line);
            } else if (key == "q") {
                cfg.q = static_cast<int>(parse_long(value, line));
            } else if (key == "p") {
                cfg.p = parse_double(value, line);
            } else if (key == "alpha") {
                cfg.alpha = parse_double(value, line);
            } else if (key == "t0") {
                cfg.t0 = parse_double(value, line);
            } else if (key == "t1") {
                cfg.t1 = parse_double(value, line);
            } else if (key == "mode") {
                cfg.mode = value;
            } else if (key == "burn_in") {
                cfg.burn_in = parse_double(value, line);
            } else if (key == "thinning") {
                cfg.thinning = parse_long(value, line);
            } else if (key == "samples") {
                cfg.samples = parse_long(value, line);
            } else if (key == "seed") {
                cfg.seed = parse_u64(value, line);
            } else {
                fail(line, "unknown key '" + qualified + "'");
            }
        } else if (section == "model") {
            if (key == "name") {
                cfg.model = value;
            } else if (key == "gamma") {
                cfg.gamma = parse_double(value, line);
            } else {
                fail(line, "unknown key '" + qualified + "'");
            }
        } else if (section == "scheme") {
            if (key == "variant") {
                cfg.variant = value;
            } else if (key == "delta") {
                cfg.delta = delta_token(value, line);
            } else if (key == "horizon") {
                cfg.horizon = parse_double(value, line);
            } else if (key == "x0") {
                cfg.x0.clear();
                for (const auto& tok : split_ws(value)) cfg.x0.push_back(parse_double(tok, line));
                if (cfg.x0.empty()) fail(line, "x0 needs at least one coordinate");
            } else if (key == "r0") {
                const long r = parse_long(value, line);
                if (r < 1) fail(line, "r0 is 1-based; got " + value);
                cfg.r0 = static_cast<int>(r) - 1;
            } else {
                fail(line, "unknown key '" + qualified + "'");
            }
        } else {  // output
            if (key == "dir") {
                cfg.out_dir = value;
            } else if (key == "svg") {
                cfg.svg = parse_bool(value, line);
            } else {
                fail(line, "unknown key '" + qualified + "'");
            }
        }
    }
    return cfg;
}

ExperimentConfig parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str());
}

std::string serialize(const ExperimentConfig& cfg) {
    if (!cfg.seed.has_value())
        throw ConfigError("cannot serialize a config without a seed");
    std::ostringstream out;
    out << "[experiment]\n";
    out << "kind = " << cfg.kind << "\n";
    out << "paths = " << cfg.paths << "\n";
    if (!cfg.deltas.empty()) {
        out << "deltas =";
        for (double d : cfg.deltas) out << ' ' << format_delta(d);
        out << "\n";
    }
    out << "delta_ref = " << format_delta(cfg.delta_ref) << "\n";
    out << "q = " << cfg.q << "\n";
    out << "p = " << format_number(cfg.p) << "\n";
    out << "alpha = " << format_number(cfg.alpha) << "\n";
    out << "t0 = " << format_number(cfg.t0) << "\n";
    out << "t1 = " << format_number(cfg.t1) << "\n";
    out << "mode = " << cfg.mode << "\n";
    out << "burn_in = " << format_number(cfg.burn_in) << "\n";
    out << "thinning = " << cfg.thinning << "\n";
    out << "samples = " << cfg.samples << "\n";
    out << "seed = " << *cfg.seed << "\n";
    out << "\n[model]\n";
    out << "name = " << cfg.model << "\n";
    out << "gamma = " << format_number(cfg.gamma) << "\n";
    out << "\n[scheme]\n";
    out << "variant = " << cfg.variant << "\n";
    out << "delta = " << format_delta(cfg.delta) << "\n";
    out << "horizon = " << format_number(cfg.horizon) << "\n";
    if (!cfg.x0.empty()) {
        out << "x0 =";
        for (double v : cfg.x0) out << ' ' << format_number(v);
        out << "\n";
    }
    if (cfg.r0 >= 0) out << "r0 = " << cfg.r0 + 1 << "\n";
    out << "\n[output]\n";
    out << "dir = " << cfg.out_dir << "\n";
    out << "svg = " << (cfg.svg ? "on" : "off") << "\n";
    return out.str();
}

void validate(const ExperimentConfig& cfg) {
    if (!kKinds.count(cfg.kind))
        throw ConfigError("unknown experiment kind '" + cfg.kind + "'");
    if (cfg.model.empty()) throw ConfigError("no model given");
    if (!cfg.seed.has_value())
        throw ConfigError("no seed given (wall-clock seeding is not supported)");
    if (!cfg.variant.empty() && !kVariants.count(cfg.variant))
        throw ConfigError("unknown scheme variant '" + cfg.variant + "'");
    if (!kModes.count(cfg.mode))
        throw ConfigError("unknown sampling mode '" + cfg.mode + "'");
    if (cfg.paths < 1) throw ConfigError("paths must be positive");
    if (cfg.samples < 1) throw ConfigError("samples must be positive");
    if (cfg.thinning < 1) throw ConfigError("thinning must be positive");
    if (cfg.q != 0 && cfg.q != 1 && cfg.q != 2) throw ConfigError("q must be 1 or 2");
    if (!(cfg.p > 0.0)) throw ConfigError("p must be positive");
    if (!(cfg.alpha > 0.0) || !(cfg.alpha < 1.0))
        throw ConfigError("alpha must lie in (0,1)");
    for (double d : cfg.deltas)
        if (!(d > 0.0) || d > 1.0)
            throw ConfigError("step sizes must lie in (0,1]; got " + format_number(d));
    if (!std::is_sorted(cfg.deltas.rbegin(), cfg.deltas.rend(),
                        [](double a, double b) { return a < b; }))
        throw ConfigError("deltas must be strictly descending");
    for (std::size_t i = 1; i < cfg.deltas.size(); ++i)
        if (cfg.deltas[i] == cfg.deltas[i - 1])
            throw ConfigError("deltas must be strictly descending");
    if (cfg.delta_ref < 0.0) throw ConfigError("delta_ref must be non-negative");
    if (cfg.delta < 0.0) throw ConfigError("delta must be non-negative");
}

} // namespace sds::config
