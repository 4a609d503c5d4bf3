#pragma once

#include <stdexcept>

namespace rkevo {

// Vector/matrix sizes disagree with what the operation requires.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numeric argument lies outside its supported range.
class BoundsError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// A file or document could not be parsed into the expected structure.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An iterative solve (implicit stage equations) failed to contract.
class NonconvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rkevo
