#include "softnpg/soft_bellman.hpp"

#include "softnpg/kernels.hpp"
#include "softnpg/policy_eval.hpp"

#include <cmath>
#include <limits>

namespace softnpg {

namespace {

void check_q_shape(const TabularMdp& mdp, const Matrix& q) {
  if (q.rows() != mdp.n_states() || q.cols() != mdp.n_actions()) throw InvalidInput("Q table shape does not match the MDP");
}

int sweep_cap(double gamma, double tol) {
  const double horizon = 1.0 / (1.0 - gamma);
  return 10 * static_cast<int>(std::ceil(std::log(2.0 * horizon / tol) * horizon));
}

// Shared driver for soft and hard value iteration.
template <typename Backup>
Matrix value_iteration(const TabularMdp& mdp, double tol, Backup&& backup, const SweepObserver& observer,
                       int& sweeps) {
  if (!(tol > 0.0)) throw InvalidInput("value iteration tolerance must be positive");
  const double gamma = mdp.gamma();
  const double stop = gamma > 0.0 ? tol * (1.0 - gamma) / (2.0 * gamma) : std::numeric_limits<double>::infinity();
  const int cap = sweep_cap(gamma, tol);
  Matrix q = Matrix::Zero(mdp.n_states(), mdp.n_actions());
  for (sweeps = 1; sweeps <= cap; ++sweeps) {
    Matrix next = backup(q);
    const double step = inf_norm(Matrix(next - q));
    q = std::move(next);
    if (observer) observer(sweeps, q);
    const double roundoff = 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, inf_norm(q));
    if (step <= stop || step <= roundoff) return q;
  }
  throw NumericalError("value iteration exceeded its sweep cap of " + std::to_string(cap));
}

constexpr int kPolishSteps = 4;

// Newton polish of a value-iteration result: exact evaluation of the greedy
// (soft or hard) policy, kept while it lowers the Bellman residual. Value
// iteration stalls a few hundred ulps short of the fixed point.
template <typename Residual, typename Improve>
Matrix polish(Matrix q, Residual&& residual, Improve&& improve) {
  double best = residual(q);
  for (int k = 0; k < kPolishSteps && best > 0.0; ++k) {
    Matrix next = improve(q);
    const double r = residual(next);
    if (!(r < best)) break;
    best = r;
    q = std::move(next);
  }
  return q;
}

}  // namespace

Matrix soft_bellman_apply(const TabularMdp& mdp, double tau, const Matrix& q) {
  if (!(tau > 0.0)) throw InvalidInput("soft Bellman operator needs tau > 0");
  check_q_shape(mdp, q);
  Vector v;
  kernels::soft_state_values(q, tau, v);
  Matrix out;
  kernels::bellman_backup(mdp.transition(), mdp.reward(), mdp.gamma(), v, out);
  return out;
}

Matrix hard_bellman_apply(const TabularMdp& mdp, const Matrix& q) {
  check_q_shape(mdp, q);
  Vector v;
  kernels::hard_state_values(q, v);
  Matrix out;
  kernels::bellman_backup(mdp.transition(), mdp.reward(), mdp.gamma(), v, out);
  return out;
}

const Distribution& SoftOptimum::require_mu_star() const {
  if (!mu_star) throw NumericalError("stationary distribution under pi*_tau unavailable: " + mu_star_issue);
  return *mu_star;
}

SoftOptimum solve_soft_optimum(const TabularMdp& mdp, double tau, double tol, const SweepObserver& observer) {
  if (!(tau > 0.0)) throw InvalidInput("solve_soft_optimum needs tau > 0");
  int sweeps = 0;
  Matrix q = value_iteration(
      mdp, tol, [&](const Matrix& cur) { return soft_bellman_apply(mdp, tau, cur); }, observer, sweeps);
  q = polish(
      std::move(q), [&](const Matrix& cur) { return inf_norm(Matrix(soft_bellman_apply(mdp, tau, cur) - cur)); },
      [&](const Matrix& cur) { return evaluate_soft(mdp, softmax_policy(Matrix(cur / tau)), tau).q; });

  Vector v;
  kernels::soft_state_values(q, tau, v);
  Matrix log_pi;
  kernels::log_normalize_rows(Matrix(q / tau), log_pi);

  SoftOptimum out{.q_star = q,
                  .v_star = v,
                  .pi_star = Policy::from_log_probs(std::move(log_pi)),
                  .mu_star = std::nullopt,
                  .mu_star_issue = {},
                  .tau = tau,
                  .residual = inf_norm(Matrix(soft_bellman_apply(mdp, tau, q) - q)),
                  .sweeps = sweeps};
  try {
    Distribution mu = stationary_distribution(mdp, out.pi_star);
    if (mu.probs().minCoeff() > 0.0) {
      out.mu_star = std::move(mu);
    } else {
      out.mu_star_issue = "stationary distribution has a zero entry";
    }
  } catch (const NonErgodicError& e) {
    out.mu_star_issue = e.what();
  }
  return out;
}

Matrix HardOptimum::greedy_probs() const {
  Matrix probs = Matrix::Zero(q_star.rows(), q_star.cols());
  for (Eigen::Index s = 0; s < probs.rows(); ++s) probs(s, greedy[s]) = 1.0;
  return probs;
}

HardOptimum solve_hard_optimum(const TabularMdp& mdp, double tol) {
  int sweeps = 0;
  HardOptimum out;
  out.q_star = value_iteration(
      mdp, tol, [&](const Matrix& cur) { return hard_bellman_apply(mdp, cur); }, {}, sweeps);
  auto greedy_of = [&](const Matrix& q) {
    std::vector<int> greedy(static_cast<std::size_t>(mdp.n_states()));
    for (int s = 0; s < mdp.n_states(); ++s) {
      int best = 0;
      for (int a = 1; a < mdp.n_actions(); ++a)
        if (q(s, a) > q(s, best)) best = a;
      greedy[static_cast<std::size_t>(s)] = best;
    }
    return greedy;
  };
  out.q_star = polish(
      std::move(out.q_star), [&](const Matrix& cur) { return inf_norm(Matrix(hard_bellman_apply(mdp, cur) - cur)); },
      [&](const Matrix& cur) {
        Matrix probs = Matrix::Zero(cur.rows(), cur.cols());
        const std::vector<int> greedy = greedy_of(cur);
        for (Eigen::Index s = 0; s < probs.rows(); ++s) probs(s, greedy[static_cast<std::size_t>(s)]) = 1.0;
        return evaluate_exact(mdp, probs).q;
      });
  kernels::hard_state_values(out.q_star, out.v_star);
  out.greedy = greedy_of(out.q_star);
  out.residual = inf_norm(Matrix(hard_bellman_apply(mdp, out.q_star) - out.q_star));
  return out;
}

double optimum_shift(const TabularMdp& mdp, double tau1, double tau2, double tol) {
  const SoftOptimum a = solve_soft_optimum(mdp, tau1, tol);
  const SoftOptimum b = solve_soft_optimum(mdp, tau2, tol);
  return inf_norm(Matrix(a.q_star - b.q_star));
}

}  // namespace softnpg
