#pragma once

#include <stdexcept>
#include <string>

namespace fluorosim {

// Malformed or inconsistent experiment configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input data that cannot be processed: schema violations, dead channels,
// single-class labels (CLI exit code 3).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Background peak fit failed to converge or was handed degenerate input.
class FitError : public DataError {
public:
    using DataError::DataError;
};

}  // namespace fluorosim
