#pragma once
#include <stdexcept>
#include <string>

namespace fedsim {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad user-supplied configuration: shapes, ranges, unknown keys.
struct ConfigError : Error {
    using Error::Error;
};

// Filesystem / format failures (IDX parsing, unwritable paths).
struct IoError : Error {
    using Error::Error;
};

// Non-finite parameters detected during training.
struct DivergenceError : Error {
    using Error::Error;
};

} // namespace fedsim
