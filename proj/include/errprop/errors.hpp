/**
 * @file errors.hpp
 * @brief Exception types shared by all errprop modules.
 */
#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace errprop {

/// Malformed or inconsistent input: wrong sizes, negative deviations, bad flags.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The inputs were well formed but the numerics could not be carried out.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Normal matrix AᵀA is (numerically) singular.
class SingularityError : public NumericalError {
 public:
  SingularityError(const std::string& what, std::vector<int> deficient_columns)
      : NumericalError(what), deficient_columns_(std::move(deficient_columns)) {}

  /// Zero-based design-matrix columns that are linearly dependent on the others.
  [[nodiscard]] const std::vector<int>& deficient_columns() const noexcept {
    return deficient_columns_;
  }

 private:
  std::vector<int> deficient_columns_;
};

/// A matrix declared as a covariance is not positive semidefinite.
class PsdViolation : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace errprop
