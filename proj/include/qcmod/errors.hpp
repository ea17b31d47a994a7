#pragma once

#include <stdexcept>
#include <string>

namespace qcmod {

/// Malformed input: bad norm parameters, shape mismatches, invalid configs.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Projections that fail to form a condenser (overlapping plates, PQ != 0).
class CondenserError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Linear-algebra breakdown (non-convergent SVD / eigensolver, NaNs).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qcmod
