#include "softnpg/policy_eval.hpp"

#include "softnpg/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace softnpg {

namespace {

constexpr double kResidualTol = 1e-8;
constexpr int kRefinementSteps = 2;

// Solves (I - gamma P_pi) v = r_pi and backs up q = r + gamma P v.
ValueQ solve_policy_values(const TabularMdp& mdp, const Matrix& probs, const Matrix& reward) {
  const int n = mdp.n_states();
  Matrix p_pi;
  kernels::policy_transition(mdp.transition(), probs, p_pi);
  const Vector r_pi = probs.cwiseProduct(reward).rowwise().sum();
  const Matrix lhs = Matrix::Identity(n, n) - mdp.gamma() * p_pi;
  const Eigen::PartialPivLU<Matrix> lu(lhs);
  Vector v = lu.solve(r_pi);
  // Iterative refinement against the unformed operator v - gamma P v.
  auto residual_of = [&](const Vector& x) { return Vector(r_pi - (x - mdp.gamma() * (p_pi * x))); };
  for (int k = 0; k < kRefinementSteps; ++k) v += lu.solve(residual_of(v));
  const double residual = inf_norm(residual_of(v));
  if (!(residual <= kResidualTol * (1.0 + inf_norm(r_pi))))
    throw NumericalError("policy evaluation solve residual too large");
  ValueQ out;
  kernels::bellman_backup(mdp.transition(), reward, mdp.gamma(), v, out.q);
  out.v = std::move(v);
  return out;
}

// exact + offset, pulled back by ulps if rounding pushed it past delta.
double perturb(double exact, double offset, double delta) {
  double noisy = exact + offset;
  while (std::abs(noisy - exact) > delta) noisy = std::nextafter(noisy, exact);
  return noisy;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

ValueQ evaluate_exact(const TabularMdp& mdp, const Matrix& probs) {
  if (probs.rows() != mdp.n_states() || probs.cols() != mdp.n_actions())
    throw InvalidInput("policy shape does not match the MDP");
  return solve_policy_values(mdp, probs, mdp.reward());
}

ValueQ evaluate_exact(const TabularMdp& mdp, const Policy& policy) { return evaluate_exact(mdp, policy.probs()); }

SoftEval evaluate_soft(const TabularMdp& mdp, const Policy& policy, double tau) {
  if (!(tau >= 0.0)) throw InvalidInput("tau must be nonnegative");
  if (policy.n_states() != mdp.n_states() || policy.n_actions() != mdp.n_actions())
    throw InvalidInput("policy shape does not match the MDP");
  const Matrix& log_pi = policy.log_probs();
  if (!log_pi.allFinite()) throw InvalidInput("policy has non-finite log-probabilities");
  const Matrix probs = policy.probs();

  // The adjusted reward r - tau log pi is not confined to [0,1], so this
  // bypasses the TabularMdp reward check and solves directly.
  const Matrix adjusted = mdp.reward() - tau * log_pi;
  ValueQ vq = solve_policy_values(mdp, probs, adjusted);

  SoftEval out;
  out.tau = tau;
  out.entropy_by_state = -(probs.cwiseProduct(log_pi)).rowwise().sum();
  out.v = std::move(vq.v);
  // Soft Q uses the original reward; the entropy bonus lives in V.
  kernels::bellman_backup(mdp.transition(), mdp.reward(), mdp.gamma(), out.v, out.q);
  out.advantage = out.q - tau * log_pi;
  out.advantage.colwise() -= out.v;
  return out;
}

double discounted_entropy(const TabularMdp& mdp, const Policy& policy, const Distribution& rho) {
  const Distribution d = discounted_visitation(mdp, policy, rho);
  const Matrix probs = policy.probs();
  const Vector h = -(probs.cwiseProduct(policy.log_probs())).rowwise().sum();
  return d.expect(h) / (1.0 - mdp.gamma());
}

double discounted_entropy(const TabularMdp& mdp, const Matrix& probs, const Distribution& rho) {
  const Distribution d = discounted_visitation(mdp, probs, rho);
  Vector h = Vector::Zero(probs.rows());
  for (Eigen::Index s = 0; s < probs.rows(); ++s)
    for (Eigen::Index a = 0; a < probs.cols(); ++a)
      if (probs(s, a) > 0.0) h[s] -= probs(s, a) * std::log(probs(s, a));
  return d.expect(h) / (1.0 - mdp.gamma());
}

NoisyOracle::NoisyOracle(double delta, std::uint64_t seed, NoiseMode mode) : delta_(delta), seed_(seed), mode_(mode) {
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw InvalidConfig("noise bound delta must be a finite value >= 0");
}

Matrix NoisyOracle::noisy_q(const Matrix& exact_q, std::uint64_t iteration, const Matrix* q_star) const {
  Matrix out = exact_q;
  if (delta_ == 0.0) return out;
  if (mode_ == NoiseMode::kAdversarial) {
    if (q_star == nullptr || q_star->rows() != exact_q.rows() || q_star->cols() != exact_q.cols())
      throw InvalidInput("adversarial noise needs the regularized optimum Q table");
    for (Eigen::Index s = 0; s < out.rows(); ++s) {
      Eigen::Index best = 0;
      q_star->row(s).maxCoeff(&best);
      for (Eigen::Index a = 0; a < out.cols(); ++a)
        out(s, a) = perturb(exact_q(s, a), a == best ? -delta_ : delta_, delta_);
    }
    return out;
  }
  const std::uint64_t base = splitmix64(seed_ ^ splitmix64(iteration));
  for (Eigen::Index s = 0; s < out.rows(); ++s) {
    for (Eigen::Index a = 0; a < out.cols(); ++a) {
      const std::uint64_t key = splitmix64(base ^ splitmix64(static_cast<std::uint64_t>(s) * 0x100000001b3ULL +
                                                            static_cast<std::uint64_t>(a)));
      const double u = static_cast<double>(key >> 11) * 0x1.0p-53;  // [0,1)
      out(s, a) = perturb(exact_q(s, a), std::clamp(delta_ * (2.0 * u - 1.0), -delta_, delta_), delta_);
    }
  }
  return out;
}

}  // namespace softnpg
