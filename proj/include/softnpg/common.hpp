#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace softnpg {

// Q-tables, rewards and policies are indexed [state][action]; transitions are
// stored as a (|S||A|) x |S| matrix whose row s*|A|+a is P(.|s,a).
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InvalidConfig : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonErgodicError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Raised when the quadratic-regime preconditions fail; the caller should
/// warm-start with more soft policy iteration steps.
class RegimeNotEntered : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Gaps below this value are dominated by solver round-off; bound checks
/// treat them as satisfied.
inline constexpr double kNumericalFloor = 1e-12;

inline double inf_norm(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }
inline double inf_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

}  // namespace softnpg
