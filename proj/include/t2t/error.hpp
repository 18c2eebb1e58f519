#pragma once

#include <stdexcept>
#include <string>

namespace t2t {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Tensor/op shape violations; message names the op and the offending shapes.
struct ShapeError : Error {
  using Error::Error;
};

// Unreadable files, malformed records, incompatible checkpoints.
struct DataError : Error {
  using Error::Error;
};

// Non-finite values where finite ones are required (diverged training,
// NaN gradients, degenerate attention).
struct NumericError : Error {
  using Error::Error;
};

}  // namespace t2t
