#pragma once

// Dense inner loops shared by evaluation, the soft Bellman operator and the
// optimizers. Every kernel has a serial reference in kernels::serial and an
// OpenMP version in kernels::omp; the unqualified names dispatch to the
// OpenMP version, which falls back to one thread below kParallelRows rows.

#include "softnpg/common.hpp"

namespace softnpg::kernels {

inline constexpr Eigen::Index kParallelRows = 2048;

namespace serial {

/// out(s,a) = reward(s,a) + gamma * sum_s' P(s'|s,a) v(s')
void bellman_backup(const Matrix& transition, const Matrix& reward, double gamma, const Vector& v,
                    Matrix& out);
/// out(s) = tau * log sum_a exp(q(s,a)/tau), max-shifted.
void soft_state_values(const Matrix& q, double tau, Vector& out);
/// out(s) = max_a q(s,a)
void hard_state_values(const Matrix& q, Vector& out);
/// out(s,s') = sum_a probs(s,a) P(s'|s,a)
void policy_transition(const Matrix& transition, const Matrix& probs, Matrix& out);
/// Per-state log-sum-exp normalization of logits into log-probabilities.
void log_normalize_rows(const Matrix& logits, Matrix& out);

}  // namespace serial

namespace omp {

void bellman_backup(const Matrix& transition, const Matrix& reward, double gamma, const Vector& v,
                    Matrix& out);
void soft_state_values(const Matrix& q, double tau, Vector& out);
void hard_state_values(const Matrix& q, Vector& out);
void policy_transition(const Matrix& transition, const Matrix& probs, Matrix& out);
void log_normalize_rows(const Matrix& logits, Matrix& out);

}  // namespace omp

using omp::bellman_backup;
using omp::hard_state_values;
using omp::log_normalize_rows;
using omp::policy_transition;
using omp::soft_state_values;

/// Stable log(sum_i exp(x_i)).
template <typename Derived>
double log_sum_exp(const Eigen::DenseBase<Derived>& x) {
  const double m = x.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((x.derived().array() - m).exp().sum());
}

}  // namespace softnpg::kernels
