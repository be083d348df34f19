#pragma once

#include <stdexcept>
#include <string>

namespace oscring {

/// Bad input: dimensions, file contents, option values. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A computation failed: no bracketing, solver breakdown, blow-up. CLI exit code 3.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace oscring
