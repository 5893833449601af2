#pragma once

#include <stdexcept>
#include <string>

namespace avdiff {

// Error taxonomy. Each maps to a CLI exit code: config/contract/dimension/
// degeneracy -> 1, io -> 2, numeric -> 3.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shape algebra violations: mismatched extents, indivisible groups, etc.
struct DimError : Error {
    using Error::Error;
};

// Precondition/contract violations that are programmer errors, not user input.
struct ContractError : Error {
    using Error::Error;
};

// Bad user-facing configuration: unknown ids, invalid ranges, missing keys.
struct ConfigError : Error {
    using Error::Error;
};

// Mathematically degenerate input: zero vectors, parallel frame axes.
struct DegeneracyError : Error {
    using Error::Error;
};

// NaN/Inf detected in a computation.
struct NumericError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

// Point at or behind the camera near plane.
struct BehindCameraError : Error {
    using Error::Error;
};

}  // namespace avdiff
