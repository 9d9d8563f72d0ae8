#pragma once

// Finite MDPs, log-space policies, state distributions, and the visitation
// and stationary distributions induced by a policy.

#include "softnpg/common.hpp"

#include <cstdint>
#include <span>

namespace softnpg {

/// Finite discounted MDP with rewards normalized to [0,1].
///
/// Transition rows must sum to one within 1e-12 and be entrywise nonnegative;
/// gamma lies in [0,1). gamma = 0 with a single state is the bandit case.
class TabularMdp {
 public:
  /// `transition` is (n_states*n_actions) x n_states, row s*n_actions+a.
  /// `reward` is n_states x n_actions. Throws InvalidInput on any violation.
  TabularMdp(Matrix transition, Matrix reward, double gamma);

  int n_states() const { return static_cast<int>(reward_.rows()); }
  int n_actions() const { return static_cast<int>(reward_.cols()); }
  double gamma() const { return gamma_; }
  const Matrix& transition() const { return transition_; }
  const Matrix& reward() const { return reward_; }
  double p(int s, int a, int next) const { return transition_(s * n_actions() + a, next); }

  /// Same dynamics and rewards under another discount.
  TabularMdp with_gamma(double gamma) const;

 private:
  Matrix transition_;
  Matrix reward_;
  double gamma_;
};

/// Probability vector over states.
class Distribution {
 public:
  explicit Distribution(Vector probs);

  static Distribution uniform(int n);
  static Distribution point(int n, int s);

  const Vector& probs() const { return probs_; }
  int size() const { return static_cast<int>(probs_.size()); }
  double operator[](int s) const { return probs_[s]; }
  double expect(const Vector& f) const { return probs_.dot(f); }

 private:
  Vector probs_;
};

/// Stochastic policy stored as log-probabilities, one normalized row per state.
class Policy {
 public:
  /// Empty placeholder (zero states); every factory below yields a valid policy.
  Policy() = default;

  /// Validates that every row exponentiates to a distribution (within 1e-10)
  /// and that every entry is finite.
  static Policy from_log_probs(Matrix log_probs);
  /// Softmax of per-state logits; same as softmax_policy.
  static Policy from_logits(const Matrix& logits);
  /// Row-stochastic probabilities with strictly positive entries.
  static Policy from_probs(const Matrix& probs);
  static Policy uniform(int n_states, int n_actions);

  const Matrix& log_probs() const { return log_probs_; }
  Matrix probs() const { return log_probs_.array().exp().matrix(); }
  int n_states() const { return static_cast<int>(log_probs_.rows()); }
  int n_actions() const { return static_cast<int>(log_probs_.cols()); }

 private:
  explicit Policy(Matrix log_probs) : log_probs_(std::move(log_probs)) {}
  Matrix log_probs_;
};

/// Per-state softmax of logits (max-shifted). Throws InvalidInput on
/// non-finite logits.
Policy softmax_policy(const Matrix& logits);

/// KL(p || q) over one action simplex. Entries with p(a) = 0 contribute 0;
/// returns +infinity when q(a) = 0 < p(a).
double kl_divergence(std::span<const double> p, std::span<const double> q);

/// Per-state KL(pi1(.|s) || pi2(.|s)) computed from log-probabilities.
Vector kl_by_state(const Policy& p, const Policy& q);

/// Representative logits with zero mean per state (the softmax gauge).
Matrix centered_logits(const Policy& policy);

/// [P_pi](s,s') = sum_a pi(a|s) P(s'|s,a).
Matrix transition_matrix(const TabularMdp& mdp, const Policy& policy);
Matrix transition_matrix(const TabularMdp& mdp, const Matrix& probs);

/// d_rho^pi = (1-gamma) rho^T (I - gamma P_pi)^{-1}; returns rho when gamma = 0.
Distribution discounted_visitation(const TabularMdp& mdp, const Policy& policy, const Distribution& rho);
Distribution discounted_visitation(const TabularMdp& mdp, const Matrix& probs, const Distribution& rho);

/// Power iteration on P_pi^T from the uniform distribution until
/// ||mu^T P_pi - mu^T||_inf <= tol. Switches to the lazy chain
/// (mu <- (mu + mu P_pi)/2) when the residual stalls. Throws NonErgodicError
/// if max_iter is exhausted.
Distribution stationary_distribution(const TabularMdp& mdp, const Policy& policy, double tol = 1e-12,
                                     int max_iter = 100000);

/// Random instance: each P(.|s,a) ~ Dirichlet(1,...,1), rewards ~ U[0,1].
/// Flat Dirichlet rows are almost surely strictly positive, so every policy
/// induces an irreducible aperiodic chain with a strictly positive
/// stationary distribution.
TabularMdp random_mdp(int n_states, int n_actions, double gamma, std::uint64_t seed);

}  // namespace softnpg
