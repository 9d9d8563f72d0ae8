#pragma once

// Policy-update schemes for entropy-regularized tabular MDPs: NPG with a
// general step size (soft policy iteration at eta = (1-gamma)/tau), its
// inexact variant, the single-state bandit recursion, CPI-style mixing, the
// quadratic-regime tracker and the tau-halving driver. Every run produces an
// IterTrace measured against a SoftOptimum oracle.

#include "softnpg/policy_eval.hpp"
#include "softnpg/soft_bellman.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace softnpg {

struct NoiseConfig {
  double delta = 0.0;
  std::uint64_t seed = 0;
  NoiseMode mode = NoiseMode::kUniform;
};

/// Largest admissible NPG step, eta = (1-gamma)/tau (soft policy iteration).
inline double spi_step_size(double gamma, double tau) { return (1.0 - gamma) / tau; }

struct NpgConfig {
  double tau = 1.0;
  double eta = 1.0;
  int max_iters = 0;
  Policy init;
  std::optional<NoiseConfig> noise;
  bool record_xi = false;

  /// Validates tau > 0, 0 < eta <= (1-gamma)/tau and max_iters >= 0; throws
  /// InvalidConfig otherwise.
  static NpgConfig create(double gamma, double tau, double eta, int max_iters, Policy init,
                          std::optional<NoiseConfig> noise = std::nullopt, bool record_xi = false);

  /// alpha = 1 - eta*tau/(1-gamma), in [0,1).
  double alpha(double gamma) const;
};

struct IterRecord {
  int iter = 0;
  double q_gap = 0.0;       ///< ||Q*_tau - Q^(t)_tau||_inf
  double logpi_gap = 0.0;   ///< ||log pi*_tau - log pi^(t)||_inf
  double v_gap = 0.0;       ///< ||V*_tau - V^(t)_tau||_inf
  double value_at_rho = 0.0;
  std::optional<double> xi_gap;              ///< ||Q*_tau - tau log xi^(t)||_inf
  std::optional<double> xi_policy_mismatch;  ///< ||log pi^(t) - log normalize(xi^(t))||_inf
  std::optional<double> value_at_mu;         ///< V^(t)_tau(mu*_tau)
};

struct IterTrace {
  std::string kind;
  double gamma = 0.0;
  double tau = 0.0;
  std::optional<double> eta;
  std::optional<double> beta;
  double delta = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double oracle_residual = 0.0;
  std::optional<double> xi_init_gap;  ///< ||Q^(0)_tau - tau log xi^(0)||_inf
  std::optional<double> kappa;        ///< quadratic-regime constant
  std::vector<IterRecord> records;

  double alpha() const { return eta ? 1.0 - *eta * tau / (1.0 - gamma) : 0.0; }
};

/// C1 = ||Q* - Q^(0)|| + 2 tau (1 - eta tau/(1-gamma)) ||log pi* - log pi^(0)||.
double c1_constant(double q_gap0, double logpi_gap0, double gamma, double tau, double eta);
/// C2 = 2 delta/(1-gamma) (1 + gamma/(eta tau)).
double c2_constant(double delta, double gamma, double tau, double eta);

/// log pi' = (1 - eta tau/(1-gamma)) log pi + eta/(1-gamma) Q - log Z, per state.
Policy npg_step(const TabularMdp& mdp, const Policy& policy, const Matrix& q_input, double tau, double eta);

/// Everything an observer may inspect about one update pi^(t) -> pi^(t+1).
struct NpgStepView {
  int t;
  const Policy& current;
  const SoftEval& current_eval;
  const Matrix& q_used;
  const Policy& next;
  const SoftEval& next_eval;
};
using NpgObserver = std::function<void(const NpgStepView&)>;

/// Runs max_iters NPG updates; records[t] describes pi^(t), t = 0..max_iters.
/// With noise configured, updates use NoisyOracle draws while the recorded
/// gaps use exact evaluations. With record_xi, tau log xi^(t) is tracked from
/// tau log xi^(0) = V*_tau(s) + tau log pi^(0)(a|s).
IterTrace run_npg(const TabularMdp& mdp, const NpgConfig& config, const SoftOptimum& oracle, const Distribution& rho,
                  const NpgObserver& observer = {});

/// Single-state, gamma = 0 recursion pi' ∝ pi^(1 - eta tau) exp(eta r) against
/// pi* = softmax(r/tau). Requires 0 < eta*tau <= 1. `init_log_probs` must be
/// a normalized log-distribution over the actions.
IterTrace run_bandit(const Vector& rewards, double tau, double eta, const Vector& init_log_probs, int max_iters);

/// (1-beta) pi + beta softmax(Q^pi_tau/tau), mixed in probability space.
/// beta must lie in (0,1].
Policy cpi_step(const TabularMdp& mdp, const Policy& policy, double tau, double beta);

/// CPI-style iterations; records value_at_rho and value_at_mu (mu*_tau).
/// Throws NumericalError if the oracle has no stationary distribution.
IterTrace run_cpi(const TabularMdp& mdp, double tau, double beta, const Policy& init, int max_iters,
                  const SoftOptimum& oracle, const Distribution& rho);

/// Soft policy iteration from `init`, for warm starts.
Policy spi_warm_start(const TabularMdp& mdp, double tau, int iters, const Policy& init);

/// kappa = 4 gamma^2 ||1/mu*||_inf / ((1-gamma) tau).
double quadratic_kappa(double gamma, double tau, const Distribution& mu_star);

/// SPI from a near-optimal `init`. Requires ||log pi^(0) - log pi*|| <= 1 and
/// kappa * (V*(mu*) - V^(0)(mu*)) < 1, and re-checks the first condition at
/// every iterate; throws RegimeNotEntered on violation.
IterTrace quadratic_regime_trace(const TabularMdp& mdp, double tau, const Policy& init, int max_iters,
                                 const SoftOptimum& oracle, const Distribution& rho);

struct AdaptiveConfig {
  double epsilon = 0.1;
  double init_tau = 1.0;
  /// eta = eta_scale * (1-gamma) / init_tau, held fixed across rounds.
  double eta_scale = 1.0;
  std::optional<Policy> init;  ///< uniform when absent
};

struct AdaptiveRound {
  int index = 0;
  double tau = 0.0;
  double eta = 0.0;
  long planned_iters = 0;  ///< T_i = ceil(log(8/(1-gamma)) / (eta tau_i))
  long updates = 0;        ///< T_i + 1 NPG updates, yielding pi^(T_i+1)
  double guarantee = 0.0;  ///< 3 tau_i log|A| / (1-gamma)
  double q_gap = 0.0;      ///< ||Q* - Q^{pi_i}||_inf against the hard-max optimum
};

struct AdaptiveResult {
  Policy policy;
  std::vector<AdaptiveRound> rounds;
  long total_planned = 0;
  long total_updates = 0;
  double q_gap = 0.0;
};

/// tau-halving driver: round i runs T_i + 1 exact NPG updates at tau_i, warm
/// starts round i+1 from pi^2 (renormalized) and halves tau; stops once
/// 3 tau_i log|A|/(1-gamma) <= epsilon. Zero rounds run when the initial tau
/// already meets the target.
AdaptiveResult run_adaptive_tau(const TabularMdp& mdp, const AdaptiveConfig& config, const HardOptimum& reference);

}  // namespace softnpg
