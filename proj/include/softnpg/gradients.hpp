#pragma once

// Parameter-space view of entropy-regularized NPG under the softmax
// parameterization: gradient, Fisher information, pseudoinverse direction,
// and the check that a parameter step reproduces the policy-space update.

#include "softnpg/policy_eval.hpp"

namespace softnpg {

/// Logits theta (zero mean per state) together with the start distribution
/// that fixes the objective V_tau^{pi_theta}(rho).
struct ParamPoint {
  Matrix theta;
  Distribution rho;

  /// Centers `logits` per state.
  static ParamPoint from_logits(const Matrix& logits, Distribution rho);
  static ParamPoint from_policy(const Policy& policy, Distribution rho);

  Policy policy() const { return softmax_policy(theta); }
};

/// Dense (|S||A|)^2 Fisher information, indexed by s*|A|+a. Block diagonal
/// across states.
class FisherMatrix {
 public:
  explicit FisherMatrix(Matrix dense, int n_actions) : dense_(std::move(dense)), n_actions_(n_actions) {}

  const Matrix& dense() const { return dense_; }
  int n_actions() const { return n_actions_; }
  /// F applied to a [state][action] table.
  Matrix apply(const Matrix& u) const;

 private:
  Matrix dense_;
  int n_actions_;
};

/// dV_tau(rho)/dtheta(s,a) = d_rho(s) pi(a|s) A_tau(s,a) / (1-gamma).
Matrix soft_policy_gradient(const TabularMdp& mdp, const ParamPoint& point, double tau);

/// E_{s~d_rho, a~pi}[score score^T] with score(s',a') = 1[s'=s](e_a' - pi(.|s)).
FisherMatrix fisher_matrix(const TabularMdp& mdp, const ParamPoint& point);

/// Minimum-norm least-squares solution of F w = grad, via SVD with singular
/// values below 1e-10 * sigma_max dropped. Throws NumericalError when the
/// residual exceeds 1e-8 * ||grad||.
Matrix npg_direction(const TabularMdp& mdp, const ParamPoint& point, double tau);

/// Subtracts the pi-weighted mean of each row.
Matrix center_by_policy(const Matrix& table, const Policy& policy);

struct StepEquivalence {
  Policy parameter_path;  ///< softmax(theta + eta * npg_direction)
  Policy policy_path;     ///< npg_step from pi_theta with the exact soft Q
  double discrepancy = 0.0;
};

StepEquivalence parameter_step_equivalence(const TabularMdp& mdp, const ParamPoint& point, double tau, double eta);

}  // namespace softnpg
