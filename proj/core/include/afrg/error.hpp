#ifndef AFRG_ERROR_HPP
#define AFRG_ERROR_HPP

#include <stdexcept>
#include <string>

namespace afrg {

//! Base class for all errors raised by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

//! Shapes do not line up (vector length, matrix dims, class counts).
struct DimensionError : Error {
  using Error::Error;
};

//! A value is outside its admissible domain (labels, hyperparameters, non-finite input).
struct DomainError : Error {
  using Error::Error;
};

//! A computation hit a degenerate state (zero-norm sum, diverged training, no usable samples).
struct DegenerateError : Error {
  using Error::Error;
};

//! Base class for persistence failures.
struct IoError : Error {
  using Error::Error;
};

struct BadMagicError : IoError {
  using IoError::IoError;
};

struct VersionMismatchError : IoError {
  using IoError::IoError;
};

struct TruncatedFileError : IoError {
  using IoError::IoError;
};

//! Malformed textual input (CSV rows, config files); messages name the offending location.
struct ParseError : IoError {
  using IoError::IoError;
};

}  // namespace afrg

#endif  // AFRG_ERROR_HPP
