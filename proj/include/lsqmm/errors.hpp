#pragma once

#include <stdexcept>
#include <string>

namespace lsqmm {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Operand shapes do not line up (matrix products, mismatched sample sizes, ...).
struct DimensionError : Error {
    using Error::Error;
};

/// A hyperparameter or argument is outside its admissible range.
struct ParameterError : Error {
    using Error::Error;
};

/// Input data failed a consistency check (bad labels, empty manifest, ...).
struct ValidationError : Error {
    using Error::Error;
};

/// A file could not be read or written.
struct IoError : Error {
    using Error::Error;
};

/// A file was read but its contents are malformed.
struct FormatError : Error {
    using Error::Error;
};

/// Non-finite values or a numerically impossible state.
struct NumericError : Error {
    using Error::Error;
};

} // namespace lsqmm
