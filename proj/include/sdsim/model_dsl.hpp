#pragma once

#include <string>
#include <string_view>

#include "sdsim/model.hpp"

namespace sds::model {

/// Parses the line-oriented model description language:
///   n=.. d=.. m=..                       dimensions (before any section)
///   [generator]                          g[i][j] = rate   (off-diagonal)
///   [regime i]                           drift[k] = expr, diff[k][l] = expr
///   [envelope i]                         phi = expr in u, or phi = auto
/// Undeclared drift/diff entries are zero. Expressions use x1..xn, norm(x),
/// abs/sqrt/exp/min/max and + - * / ^. 'auto' envelopes are fitted by
/// sampling. Errors throw ConfigError with line (and column) positions.
HybridModel parse_model(std::string_view text, std::string name = "dsl-model");

} // namespace sds::model
