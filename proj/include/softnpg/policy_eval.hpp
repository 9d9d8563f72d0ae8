#pragma once

#include "softnpg/mdp.hpp"

#include <cstdint>
#include <optional>

namespace softnpg {

struct ValueQ {
  Vector v;
  Matrix q;
};

/// Soft (entropy-regularized) evaluation of a policy.
///
/// v(s) = sum_a pi(a|s) (q(s,a) - tau log pi(a|s)),
/// q(s,a) = r(s,a) + gamma E_{s'}[v(s')],
/// advantage(s,a) = q(s,a) - tau log pi(a|s) - v(s), which has zero mean
/// under pi(.|s). entropy_by_state(s) is the one-step entropy of pi(.|s).
struct SoftEval {
  Vector v;
  Matrix q;
  Matrix advantage;
  Vector entropy_by_state;
  double tau = 0.0;

  double value_at(const Distribution& rho) const { return rho.expect(v); }
};

/// Unregularized V^pi and Q^pi by one LU solve of (I - gamma P_pi) V = r_pi.
/// `probs` may contain zeros (deterministic policies).
ValueQ evaluate_exact(const TabularMdp& mdp, const Policy& policy);
ValueQ evaluate_exact(const TabularMdp& mdp, const Matrix& probs);

/// Soft evaluation via the reward-adjusted MDP r(s,a) - tau log pi(a|s).
/// tau = 0 reproduces evaluate_exact.
SoftEval evaluate_soft(const TabularMdp& mdp, const Policy& policy, double tau);

/// H(rho, pi) = 1/(1-gamma) E_{s ~ d_rho^pi}[ entropy of pi(.|s) ].
double discounted_entropy(const TabularMdp& mdp, const Policy& policy, const Distribution& rho);
/// Same, for a probability table that may contain zeros (0 log 0 = 0).
double discounted_entropy(const TabularMdp& mdp, const Matrix& probs, const Distribution& rho);

enum class NoiseMode {
  kUniform,      ///< independent U[-delta, delta] per entry
  kAdversarial,  ///< -delta on the regularized-optimal action, +delta elsewhere
};

/// Perturbs exact soft Q-tables with l_inf-bounded noise.
///
/// Draws are a pure function of (seed, iteration, s, a), so the stream is
/// fresh for every iteration and replayable in any evaluation order.
class NoisyOracle {
 public:
  NoisyOracle(double delta, std::uint64_t seed, NoiseMode mode = NoiseMode::kUniform);

  double delta() const { return delta_; }
  std::uint64_t seed() const { return seed_; }
  NoiseMode mode() const { return mode_; }

  /// `q_star` is required in adversarial mode and ignored otherwise.
  Matrix noisy_q(const Matrix& exact_q, std::uint64_t iteration, const Matrix* q_star = nullptr) const;

 private:
  double delta_;
  std::uint64_t seed_;
  NoiseMode mode_;
};

}  // namespace softnpg
