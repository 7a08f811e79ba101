#pragma once

#include <stdexcept>
#include <string>

namespace cfdiff {

// Shape/dimension disagreement between tensors or configured sizes.
class DimensionError : public std::invalid_argument {
public:
    explicit DimensionError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Invalid configuration value (counts, ranges, layer dims).
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Bad runtime input (non-physical value, missing conditioning, ...).
class InputError : public std::invalid_argument {
public:
    explicit InputError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Non-finite value where a finite one is required (loss, gradient).
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// File / serialization failure; message carries the path.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace cfdiff
