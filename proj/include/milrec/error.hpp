#pragma once

#include <stdexcept>

namespace milrec {

// Error taxonomy used across the library. The CLI maps these onto exit
// codes: InvalidArgument -> 1, InputError/FormatError/EvalError -> 2,
// NumericError -> 3.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidArgument : Error {
  using Error::Error;
};

// Bad user-supplied data (unreadable file, malformed row, vocabulary
// mismatch, empty result after filtering).
struct InputError : Error {
  using Error::Error;
};

// Corrupt or incompatible on-disk artifacts (checkpoints, manifests).
struct FormatError : Error {
  using Error::Error;
};

struct NumericError : Error {
  using Error::Error;
};

// Evaluation asked for an analysis the model cannot support.
struct EvalError : Error {
  using Error::Error;
};

}  // namespace milrec
