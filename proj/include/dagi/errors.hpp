#pragma once

#include <stdexcept>
#include <string>

namespace dagi {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Matrix/layer shape mismatches.
struct DimensionError : Error {
    using Error::Error;
};

/// A caller violated an operation's precondition.
struct ContractError : Error {
    using Error::Error;
};

/// Malformed input file (edge list, CSV, checkpoint); message carries coordinates.
struct FormatError : Error {
    using Error::Error;
};

/// Dataset columns do not match the expected schema.
struct SchemaError : Error {
    using Error::Error;
};

/// Non-finite losses or gradients during optimization.
struct TrainingError : Error {
    using Error::Error;
};

/// Filesystem failures (unwritable path, truncated file).
struct IoError : Error {
    using Error::Error;
};

/// Invalid run configuration (CLI maps this to exit code 2).
struct ConfigError : Error {
    using Error::Error;
};

} // namespace dagi
