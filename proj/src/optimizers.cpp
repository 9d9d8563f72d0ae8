#include "softnpg/optimizers.hpp"

#include "softnpg/kernels.hpp"

#include <cmath>
#include <limits>

namespace softnpg {

namespace {

// Admissible-range checks compare against (1-gamma)/tau computed in floating
// point, so the SPI step itself must not be rejected by a rounding ulp.
constexpr double kStepSlack = 1e-12;

void check_step(double gamma, double tau, double eta) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw InvalidConfig("tau must be positive");
  if (!(eta > 0.0) || eta > spi_step_size(gamma, tau) * (1.0 + kStepSlack))
    throw InvalidConfig("step size eta must satisfy 0 < eta <= (1-gamma)/tau");
}

double step_alpha(double gamma, double tau, double eta) {
  const double alpha = 1.0 - eta * tau / (1.0 - gamma);
  return std::abs(alpha) < 1e-14 ? 0.0 : std::max(alpha, 0.0);
}

IterRecord measure(int t, const SoftEval& eval, const Policy& policy, const SoftOptimum& oracle,
                   const Distribution& rho) {
  IterRecord rec;
  rec.iter = t;
  rec.q_gap = inf_norm(Matrix(oracle.q_star - eval.q));
  rec.logpi_gap = inf_norm(Matrix(oracle.pi_star.log_probs() - policy.log_probs()));
  rec.v_gap = inf_norm(Vector(oracle.v_star - eval.v));
  rec.value_at_rho = eval.value_at(rho);
  if (oracle.mu_star) rec.value_at_mu = eval.value_at(*oracle.mu_star);
  return rec;
}

void check_oracle(const TabularMdp& mdp, const SoftOptimum& oracle, double tau) {
  if (oracle.q_star.rows() != mdp.n_states() || oracle.q_star.cols() != mdp.n_actions())
    throw InvalidInput("oracle shape does not match the MDP");
  if (std::abs(oracle.tau - tau) > 1e-15 * std::max(1.0, tau))
    throw InvalidInput("oracle was computed at a different tau");
}

IterTrace base_trace(std::string kind, const TabularMdp& mdp, double tau, const SoftOptimum& oracle) {
  IterTrace trace;
  trace.kind = std::move(kind);
  trace.gamma = mdp.gamma();
  trace.tau = tau;
  trace.oracle_residual = oracle.residual;
  return trace;
}

}  // namespace

NpgConfig NpgConfig::create(double gamma, double tau, double eta, int max_iters, Policy init,
                            std::optional<NoiseConfig> noise, bool record_xi) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidConfig("gamma must lie in [0,1)");
  check_step(gamma, tau, eta);
  if (max_iters < 0) throw InvalidConfig("max_iters must be nonnegative");
  if (init.n_states() == 0) throw InvalidConfig("initial policy is empty");
  if (noise && !(noise->delta >= 0.0)) throw InvalidConfig("noise bound delta must be >= 0");
  return NpgConfig{tau, eta, max_iters, std::move(init), noise, record_xi};
}

double NpgConfig::alpha(double gamma) const { return step_alpha(gamma, tau, eta); }

double c1_constant(double q_gap0, double logpi_gap0, double gamma, double tau, double eta) {
  return q_gap0 + 2.0 * tau * step_alpha(gamma, tau, eta) * logpi_gap0;
}

double c2_constant(double delta, double gamma, double tau, double eta) {
  return 2.0 * delta / (1.0 - gamma) * (1.0 + gamma / (eta * tau));
}

Policy npg_step(const TabularMdp& mdp, const Policy& policy, const Matrix& q_input, double tau, double eta) {
  check_step(mdp.gamma(), tau, eta);
  if (q_input.rows() != mdp.n_states() || q_input.cols() != mdp.n_actions() || policy.n_states() != mdp.n_states() ||
      policy.n_actions() != mdp.n_actions())
    throw InvalidInput("npg_step: shape mismatch");
  const double alpha = step_alpha(mdp.gamma(), tau, eta);
  const double scale = eta / (1.0 - mdp.gamma());
  Matrix logits = scale * q_input;
  if (alpha > 0.0) logits += alpha * policy.log_probs();
  Matrix out;
  kernels::log_normalize_rows(logits, out);
  return Policy::from_log_probs(std::move(out));
}

IterTrace run_npg(const TabularMdp& mdp, const NpgConfig& config, const SoftOptimum& oracle, const Distribution& rho,
                  const NpgObserver& observer) {
  check_step(mdp.gamma(), config.tau, config.eta);
  check_oracle(mdp, oracle, config.tau);
  const double gamma = mdp.gamma();
  const double tau = config.tau;
  const double alpha = config.alpha(gamma);
  const bool spi = alpha == 0.0;

  IterTrace trace = base_trace(config.noise ? "inexact" : (spi ? "spi" : "npg"), mdp, tau, oracle);
  trace.eta = config.eta;
  std::optional<NoisyOracle> noisy;
  if (config.noise) {
    noisy.emplace(config.noise->delta, config.noise->seed, config.noise->mode);
    trace.delta = config.noise->delta;
  }
  trace.c2 = c2_constant(trace.delta, gamma, tau, config.eta);

  Policy policy = config.init;
  SoftEval eval = evaluate_soft(mdp, policy, tau);

  // tau log xi, stored instead of xi, which overflows for small tau.
  Matrix tau_log_xi;
  auto xi_diagnostics = [&](IterRecord& rec) {
    rec.xi_gap = inf_norm(Matrix(oracle.q_star - tau_log_xi));
    Matrix normalized;
    kernels::log_normalize_rows(Matrix(tau_log_xi / tau), normalized);
    rec.xi_policy_mismatch = inf_norm(Matrix(normalized - policy.log_probs()));
  };
  if (config.record_xi) {
    tau_log_xi = tau * policy.log_probs();
    tau_log_xi.colwise() += oracle.v_star;
    trace.xi_init_gap = inf_norm(Matrix(eval.q - tau_log_xi));
  }

  trace.records.reserve(static_cast<std::size_t>(config.max_iters) + 1);
  trace.records.push_back(measure(0, eval, policy, oracle, rho));
  if (config.record_xi) xi_diagnostics(trace.records.back());
  trace.c1 = c1_constant(trace.records[0].q_gap, trace.records[0].logpi_gap, gamma, tau, config.eta);

  for (int t = 0; t < config.max_iters; ++t) {
    const Matrix q_used = noisy ? noisy->noisy_q(eval.q, static_cast<std::uint64_t>(t), &oracle.q_star) : eval.q;
    Policy next = npg_step(mdp, policy, q_used, tau, config.eta);
    SoftEval next_eval = evaluate_soft(mdp, next, tau);
    if (config.record_xi) tau_log_xi = alpha * tau_log_xi + (1.0 - alpha) * q_used;
    if (observer) observer(NpgStepView{t, policy, eval, q_used, next, next_eval});
    policy = std::move(next);
    eval = std::move(next_eval);
    trace.records.push_back(measure(t + 1, eval, policy, oracle, rho));
    if (config.record_xi) xi_diagnostics(trace.records.back());
  }
  return trace;
}

IterTrace run_bandit(const Vector& rewards, double tau, double eta, const Vector& init_log_probs, int max_iters) {
  const Eigen::Index n = rewards.size();
  if (n < 1) throw InvalidInput("bandit needs at least one arm");
  if (init_log_probs.size() != n || !init_log_probs.allFinite())
    throw InvalidInput("bandit initial policy must be a finite log-distribution over the arms");
  if (std::abs(init_log_probs.array().exp().sum() - 1.0) > 1e-10)
    throw InvalidInput("bandit initial policy does not normalize");
  if (!(tau > 0.0) || !(eta > 0.0) || eta * tau > 1.0 + kStepSlack)
    throw InvalidConfig("bandit step must satisfy 0 < eta*tau <= 1");
  if (max_iters < 0) throw InvalidConfig("max_iters must be nonnegative");

  const Vector scaled = rewards / tau;
  const Vector log_pi_star = scaled.array() - kernels::log_sum_exp(scaled);
  const double v_star = tau * kernels::log_sum_exp(scaled);
  double decay = 1.0 - eta * tau;
  if (std::abs(decay) < 1e-14) decay = 0.0;

  IterTrace trace;
  trace.kind = "bandit";
  trace.gamma = 0.0;
  trace.tau = tau;
  trace.eta = eta;

  Vector log_pi = init_log_probs;
  auto record = [&](int t) {
    IterRecord rec;
    rec.iter = t;
    rec.q_gap = 0.0;  // Q = r for every policy when gamma = 0
    rec.logpi_gap = (log_pi_star - log_pi).cwiseAbs().maxCoeff();
    const Vector probs = log_pi.array().exp();
    rec.value_at_rho = probs.dot(Vector(rewards - tau * log_pi));
    rec.v_gap = std::abs(v_star - rec.value_at_rho);
    trace.records.push_back(rec);
  };
  record(0);
  trace.c1 = c1_constant(0.0, trace.records[0].logpi_gap, 0.0, tau, eta);
  for (int t = 0; t < max_iters; ++t) {
    const Vector logits = decay * log_pi + eta * rewards;
    log_pi = logits.array() - kernels::log_sum_exp(logits);
    record(t + 1);
  }
  return trace;
}

namespace {

Policy cpi_mix(const Policy& policy, const SoftEval& eval, double tau, double beta) {
  if (!(beta > 0.0 && beta <= 1.0)) throw InvalidConfig("CPI mixing weight beta must lie in (0,1]");
  Matrix target_log;
  kernels::log_normalize_rows(Matrix(eval.q / tau), target_log);
  const Matrix mixed = (1.0 - beta) * policy.probs() + beta * target_log.array().exp().matrix();
  if (!(mixed.minCoeff() > 0.0)) throw NumericalError("CPI mixture underflowed to a zero probability");
  return Policy::from_probs(mixed);
}

}  // namespace

Policy cpi_step(const TabularMdp& mdp, const Policy& policy, double tau, double beta) {
  if (!(tau > 0.0)) throw InvalidConfig("tau must be positive");
  if (!(beta > 0.0 && beta <= 1.0)) throw InvalidConfig("CPI mixing weight beta must lie in (0,1]");
  return cpi_mix(policy, evaluate_soft(mdp, policy, tau), tau, beta);
}

IterTrace run_cpi(const TabularMdp& mdp, double tau, double beta, const Policy& init, int max_iters,
                  const SoftOptimum& oracle, const Distribution& rho) {
  if (!(tau > 0.0)) throw InvalidConfig("tau must be positive");
  if (!(beta > 0.0 && beta <= 1.0)) throw InvalidConfig("CPI mixing weight beta must lie in (0,1]");
  if (max_iters < 0) throw InvalidConfig("max_iters must be nonnegative");
  check_oracle(mdp, oracle, tau);
  oracle.require_mu_star();

  IterTrace trace = base_trace("cpi", mdp, tau, oracle);
  trace.beta = beta;
  Policy policy = init;
  SoftEval eval = evaluate_soft(mdp, policy, tau);
  trace.records.push_back(measure(0, eval, policy, oracle, rho));
  for (int t = 0; t < max_iters; ++t) {
    policy = cpi_mix(policy, eval, tau, beta);
    eval = evaluate_soft(mdp, policy, tau);
    trace.records.push_back(measure(t + 1, eval, policy, oracle, rho));
  }
  return trace;
}

Policy spi_warm_start(const TabularMdp& mdp, double tau, int iters, const Policy& init) {
  if (iters < 0) throw InvalidConfig("warm-start iterations must be nonnegative");
  const double eta = spi_step_size(mdp.gamma(), tau);
  Policy policy = init;
  for (int t = 0; t < iters; ++t) policy = npg_step(mdp, policy, evaluate_soft(mdp, policy, tau).q, tau, eta);
  return policy;
}

double quadratic_kappa(double gamma, double tau, const Distribution& mu_star) {
  const double inv_min = 1.0 / mu_star.probs().minCoeff();
  return 4.0 * gamma * gamma * inv_min / ((1.0 - gamma) * tau);
}

IterTrace quadratic_regime_trace(const TabularMdp& mdp, double tau, const Policy& init, int max_iters,
                                 const SoftOptimum& oracle, const Distribution& rho) {
  if (!(tau > 0.0)) throw InvalidConfig("tau must be positive");
  if (max_iters < 0) throw InvalidConfig("max_iters must be nonnegative");
  check_oracle(mdp, oracle, tau);
  const Distribution& mu = oracle.require_mu_star();
  const double kappa = quadratic_kappa(mdp.gamma(), tau, mu);
  const double eta = spi_step_size(mdp.gamma(), tau);

  IterTrace trace = base_trace("quadratic", mdp, tau, oracle);
  trace.eta = eta;
  trace.kappa = kappa;

  Policy policy = init;
  SoftEval eval = evaluate_soft(mdp, policy, tau);
  trace.records.push_back(measure(0, eval, policy, oracle, rho));
  const IterRecord& first = trace.records[0];
  if (first.logpi_gap > 1.0)
    throw RegimeNotEntered("initial policy is farther than 1 from log pi*_tau in sup norm; run more SPI steps first");
  const double g0 = oracle.v_star.dot(mu.probs()) - *first.value_at_mu;
  if (!(kappa * g0 < 1.0))
    throw RegimeNotEntered("kappa * (V*(mu*) - V(mu*)) >= 1 at the initial policy; run more SPI steps first");
  trace.c1 = c1_constant(first.q_gap, first.logpi_gap, mdp.gamma(), tau, eta);

  for (int t = 0; t < max_iters; ++t) {
    policy = npg_step(mdp, policy, eval.q, tau, eta);
    eval = evaluate_soft(mdp, policy, tau);
    trace.records.push_back(measure(t + 1, eval, policy, oracle, rho));
    if (trace.records.back().logpi_gap > 1.0)
      throw RegimeNotEntered("iterate " + std::to_string(t + 1) + " left the unit log-policy neighbourhood");
  }
  return trace;
}

AdaptiveResult run_adaptive_tau(const TabularMdp& mdp, const AdaptiveConfig& config, const HardOptimum& reference) {
  if (!(config.epsilon > 0.0)) throw InvalidConfig("epsilon must be positive");
  if (!(config.init_tau > 0.0)) throw InvalidConfig("initial tau must be positive");
  if (!(config.eta_scale > 0.0 && config.eta_scale <= 1.0)) throw InvalidConfig("eta scale must lie in (0,1]");
  if (reference.q_star.rows() != mdp.n_states() || reference.q_star.cols() != mdp.n_actions())
    throw InvalidInput("reference optimum shape does not match the MDP");

  const double gamma = mdp.gamma();
  const double log_a = std::log(static_cast<double>(mdp.n_actions()));
  const double eta = config.eta_scale * (1.0 - gamma) / config.init_tau;
  auto guarantee = [&](double tau) { return 3.0 * tau * log_a / (1.0 - gamma); };
  auto unregularized_gap = [&](const Policy& p) {
    return inf_norm(Matrix(reference.q_star - evaluate_exact(mdp, p).q));
  };

  AdaptiveResult result;
  result.policy = config.init ? *config.init : Policy::uniform(mdp.n_states(), mdp.n_actions());
  if (guarantee(config.init_tau) <= config.epsilon) {
    result.q_gap = unregularized_gap(result.policy);
    return result;
  }

  Policy start = result.policy;
  double tau = config.init_tau;
  for (int i = 0;; ++i) {
    AdaptiveRound round;
    round.index = i;
    round.tau = tau;
    round.eta = eta;
    round.planned_iters = static_cast<long>(std::ceil(std::log(8.0 / (1.0 - gamma)) / (eta * tau)));
    round.updates = round.planned_iters + 1;
    round.guarantee = guarantee(tau);

    Policy policy = start;
    for (long t = 0; t < round.updates; ++t)
      policy = npg_step(mdp, policy, evaluate_soft(mdp, policy, tau).q, tau, eta);
    round.q_gap = unregularized_gap(policy);

    result.total_planned += round.planned_iters;
    result.total_updates += round.updates;
    result.rounds.push_back(round);
    result.policy = policy;
    result.q_gap = round.q_gap;
    if (round.guarantee <= config.epsilon) break;

    // pi_{i+1}^(0) ∝ (pi_i^(T_i+1))^2
    start = softmax_policy(Matrix(2.0 * policy.log_probs()));
    tau *= 0.5;
  }
  return result;
}

}  // namespace softnpg
