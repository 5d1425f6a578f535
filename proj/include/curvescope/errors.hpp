#ifndef CURVESCOPE_ERRORS_HPP
#define CURVESCOPE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace curvescope {

// Error taxonomy mirrors the CLI exit codes: 2 config, 3 data, 4 numeric.

// Bad parameters, CLI usage, or an invalid configuration file.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or inconsistent input data (files, matrices, annotations).
class DataError : public std::runtime_error {
public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure: rank deficiency, zero variance, fit breakdown.
class NumericError : public std::runtime_error {
public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

}  // namespace curvescope

#endif
