#pragma once

// Soft Bellman optimality operator and the value-iteration oracles that
// supply ground truth (Q*_tau, V*_tau, pi*_tau, mu*_tau) to the optimizers
// and verification suites.

#include "softnpg/mdp.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace softnpg {

/// T_tau(Q)(s,a) = r(s,a) + gamma E_{s'}[ tau * LSE(Q(s',.)/tau) ]. tau > 0.
Matrix soft_bellman_apply(const TabularMdp& mdp, double tau, const Matrix& q);

/// T(Q)(s,a) = r(s,a) + gamma E_{s'}[ max_a' Q(s',a') ].
Matrix hard_bellman_apply(const TabularMdp& mdp, const Matrix& q);

struct SoftOptimum {
  Matrix q_star;
  Vector v_star;
  Policy pi_star;
  /// Stationary distribution of the chain under pi_star. Absent when power
  /// iteration failed or the result has a zero entry; see mu_star_issue.
  std::optional<Distribution> mu_star;
  std::string mu_star_issue;
  double tau = 0.0;
  double residual = 0.0;  ///< ||T_tau(Q*) - Q*||_inf
  int sweeps = 0;

  /// Throws NumericalError carrying mu_star_issue when mu_star is absent.
  const Distribution& require_mu_star() const;
};

/// Called after every value-iteration sweep with (sweep index, new iterate).
using SweepObserver = std::function<void(int, const Matrix&)>;

/// Soft value iteration from Q = 0 until successive iterates differ by at
/// most tol*(1-gamma)/(2*gamma), which bounds ||Q_k - Q*||_inf by tol. If the
/// increments reach round-off level first, iteration stops there and the
/// achieved residual is reported. Throws NumericalError when the sweep cap
/// 10*ceil(log(2/((1-gamma) tol)) / (1-gamma)) is exceeded.
SoftOptimum solve_soft_optimum(const TabularMdp& mdp, double tau, double tol = 1e-12,
                               const SweepObserver& observer = {});

/// Unregularized optimum by hard-max value iteration polished with exact
/// policy-iteration steps, with greedy actions
/// (ties go to the lowest action index).
struct HardOptimum {
  Matrix q_star;
  Vector v_star;
  std::vector<int> greedy;
  double residual = 0.0;

  /// 0/1 probability table of the greedy policy.
  Matrix greedy_probs() const;
};

HardOptimum solve_hard_optimum(const TabularMdp& mdp, double tol = 1e-12);

/// ||Q*_{tau1} - Q*_{tau2}||_inf with both optima solved to `tol`.
double optimum_shift(const TabularMdp& mdp, double tau1, double tau2, double tol = 1e-12);

}  // namespace softnpg
