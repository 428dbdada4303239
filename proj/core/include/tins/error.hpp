#pragma once

#include <stdexcept>
#include <string>

namespace tins {

// Bad or inconsistent input data (malformed files, unknown references).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Parameters that violate a configuration invariant.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace tins
