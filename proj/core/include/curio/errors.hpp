#pragma once

#include <stdexcept>
#include <string>

namespace curio {

// Bad wiring: shapes, names, hyperparameter ranges, malformed config files.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Valid configuration used incorrectly at runtime (empty batch, T < 2, ...).
class UsageError : public std::runtime_error {
public:
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace curio
