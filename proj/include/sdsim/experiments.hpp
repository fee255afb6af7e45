#pragma once

#include <string>

#include "sdsim/builtin_models.hpp"
#include "sdsim/config.hpp"
#include "sdsim/schemes.hpp"

namespace sds::experiments {

inline constexpr char kVersion[] = "0.1.0";

struct LoadedModel {
    model::HybridModel model;
    bool is_builtin = false;
    model::Preset preset;  // valid only when is_builtin
};

/// Resolves a built-in name or reads and parses a model description file.
LoadedModel load_model(const config::ExperimentConfig& cfg);

struct RunOptions {
    config::ExperimentConfig cfg;
    int workers = 1;
    bool paper_scale = false;
};

/// Executes cfg.kind, writing CSV artifacts, optional SVG plots and a
/// manifest (the fully resolved config, reparseable for a bit-exact rerun)
/// into the output directory. Throws ConfigError / NumericalError.
void run(const RunOptions& options);

/// Registry text for the model listing command.
std::string describe_models();

} // namespace sds::experiments
