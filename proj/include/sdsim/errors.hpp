#pragma once

#include <stdexcept>
#include <string>

namespace sds {

/// Error raised for invalid configuration or model input.
/// The command line maps it to exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Error raised when a computation fails numerically (non-finite state,
/// spectral solve inconsistent with its preconditions, ...).
/// The command line maps it to exit code 3.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace sds
