#pragma once

#include <stdexcept>

namespace onset {

// Error taxonomy mirrored by the CLI exit codes:
//   ConfigError -> 1, IoError -> 2, NumericError -> 3.
// Contract misuse (bad dimensions, windows too small, ...) throws
// std::invalid_argument and is treated as a usage error by the CLI.

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace onset
