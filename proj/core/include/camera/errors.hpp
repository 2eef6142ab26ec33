#pragma once

#include <stdexcept>
#include <string>

namespace camera {

// Error categories map 1:1 onto CLI exit codes (usage/config = 1,
// data/format = 2, numerical = 3).

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace camera
