#pragma once

#include <stdexcept>
#include <string>

namespace afgrl {

// Error categories map onto CLI exit codes: config/usage -> 1, data -> 2,
// numerical failure -> 3. Contract violations inside the library throw
// std::invalid_argument and are treated as usage errors at the CLI boundary.

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace afgrl
