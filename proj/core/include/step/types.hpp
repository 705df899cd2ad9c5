#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace step {

using Vector = Eigen::VectorXd;
// Row-major so that each row is one contiguous point.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Label : int { kNegative = -1, kPositive = 1 };

inline constexpr int to_int(Label label) { return static_cast<int>(label); }

// Base of every error the library raises deliberately. Precondition
// violations on numeric arguments use std::invalid_argument instead.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed schema, CSV/schema mismatch, or a raw record that does not fit
// the schema.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// A categorical or ordinal value that is not one of the declared levels.
class UnknownCategoryError : public SchemaError {
 public:
  using SchemaError::SchemaError;
};

// Unusable experiment or service configuration (including missing files).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace step
