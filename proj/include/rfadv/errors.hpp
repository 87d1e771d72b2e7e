#pragma once

#include <stdexcept>

namespace rfadv {

// Error taxonomy, mapped to CLI exit codes:
//   ConfigError / InputError -> 1, IoError -> 2, NumericError -> 3.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace rfadv
