#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sds::config {

/// Typed view of the sectioned key=value experiment file. Sections are
/// [experiment], [model], [scheme] and [output]; keys outside the known set
/// are rejected. Negative sentinels mean "use the model preset default".
struct ExperimentConfig {
    // [experiment]
    std::string kind;
    long paths = 500;
    std::vector<double> deltas;  // strictly descending step sizes
    double delta_ref = 0.0;      // reference step; 0 picks a default
    int q = 0;                   // error norm order: 1, 2, or 0 = model default
    double p = 0.5;              // moment / transport order
    double alpha = 0.02;
    double t0 = -1.0;            // trace fit window
    double t1 = -1.0;
    std::string mode = "across-paths";
    double burn_in = -1.0;
    long thinning = 10;
    long samples = 500;
    std::optional<std::uint64_t> seed;

    // [model]
    std::string model;
    double gamma = 1.5;  // rate knob of the configurable built-in

    // [scheme]
    std::string variant;  // empty = per-experiment default
    double delta = 0.0;
    double horizon = -1.0;
    std::vector<double> x0;
    int r0 = -1;  // 0-based

    // [output]
    std::string out_dir = "out";
    bool svg = true;

    bool operator==(const ExperimentConfig&) const = default;
};

/// Parses config text. Unknown sections or keys, duplicate keys and
/// malformed values throw ConfigError naming the line.
ExperimentConfig parse_string(const std::string& text);

ExperimentConfig parse_file(const std::string& path);

/// Canonical complete form: fixed section and key order, every key written,
/// numbers formatted so that parse(serialize(c)) == c. Requires a seed.
std::string serialize(const ExperimentConfig& cfg);

/// Structural invariants: known kind/variant/mode, descending deltas in
/// (0,1], positive counts, alpha in (0,1), seed present.
void validate(const ExperimentConfig& cfg);

/// Accepts "2^-k" tokens alongside plain decimals.
double parse_delta_token(const std::string& token);

/// Writes exact powers of two as "2^-k", everything else as a plain decimal.
std::string format_delta(double value);

/// Round-trip decimal formatting for doubles.
std::string format_number(double value);

} // namespace sds::config
