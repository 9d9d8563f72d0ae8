#include "softnpg/mdp.hpp"

#include "softnpg/kernels.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace softnpg {

namespace {

constexpr double kRowSumTol = 1e-12;
constexpr double kPolicyTol = 1e-10;
constexpr double kSolveResidualTol = 1e-8;

std::string where(int s, int a) {
  std::ostringstream os;
  os << "(s=" << s << ", a=" << a << ")";
  return os.str();
}

Vector clean_distribution(Vector v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v[i] < 0.0 && v[i] > -1e-12) v[i] = 0.0;
  }
  const double total = v.sum();
  if (total > 0.0) v /= total;
  return v;
}

}  // namespace

TabularMdp::TabularMdp(Matrix transition, Matrix reward, double gamma)
    : transition_(std::move(transition)), reward_(std::move(reward)), gamma_(gamma) {
  const Eigen::Index n_states = reward_.rows();
  const Eigen::Index n_actions = reward_.cols();
  if (n_states < 1 || n_actions < 1) throw InvalidInput("MDP needs at least one state and one action");
  if (transition_.rows() != n_states * n_actions || transition_.cols() != n_states)
    throw InvalidInput("transition tensor must be (n_states*n_actions) x n_states");
  if (!(gamma_ >= 0.0 && gamma_ < 1.0)) throw InvalidInput("gamma must lie in [0,1)");
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) {
      const double r = reward_(s, a);
      if (!std::isfinite(r) || r < 0.0 || r > 1.0)
        throw InvalidInput("reward outside [0,1] at " + where(s, a));
      const auto row = transition_.row(s * n_actions + a);
      if (!row.allFinite() || row.minCoeff() < 0.0)
        throw InvalidInput("negative or non-finite transition probability at " + where(s, a));
      if (std::abs(row.sum() - 1.0) > kRowSumTol)
        throw InvalidInput("transition row does not sum to 1 at " + where(s, a));
    }
  }
}

TabularMdp TabularMdp::with_gamma(double gamma) const { return TabularMdp(transition_, reward_, gamma); }

Distribution::Distribution(Vector probs) : probs_(std::move(probs)) {
  if (probs_.size() < 1) throw InvalidInput("empty distribution");
  if (!probs_.allFinite() || probs_.minCoeff() < 0.0) throw InvalidInput("distribution has negative entries");
  if (std::abs(probs_.sum() - 1.0) > kRowSumTol) throw InvalidInput("distribution does not sum to 1");
}

Distribution Distribution::uniform(int n) { return Distribution(Vector::Constant(n, 1.0 / n)); }

Distribution Distribution::point(int n, int s) {
  if (s < 0 || s >= n) throw InvalidInput("point mass outside the state set");
  Vector v = Vector::Zero(n);
  v[s] = 1.0;
  return Distribution(std::move(v));
}

Policy Policy::from_log_probs(Matrix log_probs) {
  if (log_probs.size() == 0) throw InvalidInput("empty policy");
  if (!log_probs.allFinite()) throw InvalidInput("policy has non-finite log-probabilities");
  for (Eigen::Index s = 0; s < log_probs.rows(); ++s) {
    const double total = log_probs.row(s).array().exp().sum();
    if (std::abs(total - 1.0) > kPolicyTol) throw InvalidInput("policy row does not normalize");
  }
  return Policy(std::move(log_probs));
}

Policy Policy::from_logits(const Matrix& logits) { return softmax_policy(logits); }

Policy Policy::from_probs(const Matrix& probs) {
  if (probs.size() == 0) throw InvalidInput("empty policy");
  if (!probs.allFinite() || probs.minCoeff() <= 0.0)
    throw InvalidInput("policy probabilities must be strictly positive");
  if (((probs.rowwise().sum().array() - 1.0).abs() > kPolicyTol).any())
    throw InvalidInput("policy probability rows must sum to one");
  Matrix logs = probs.array().log().matrix();
  // Re-canonicalize so rows sum to one exactly in log space.
  Matrix normalized;
  kernels::log_normalize_rows(logs, normalized);
  return from_log_probs(std::move(normalized));
}

Policy Policy::uniform(int n_states, int n_actions) {
  if (n_states < 1 || n_actions < 1) throw InvalidInput("empty policy");
  return Policy(Matrix::Constant(n_states, n_actions, -std::log(static_cast<double>(n_actions))));
}

Policy softmax_policy(const Matrix& logits) {
  if (logits.size() == 0) throw InvalidInput("empty logits");
  if (!logits.allFinite()) throw InvalidInput("non-finite logits");
  Matrix out;
  kernels::log_normalize_rows(logits, out);
  return Policy::from_log_probs(std::move(out));
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw InvalidInput("kl_divergence: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) return std::numeric_limits<double>::infinity();
    acc += p[i] * std::log(p[i] / q[i]);
  }
  return acc;
}

Vector kl_by_state(const Policy& p, const Policy& q) {
  if (p.n_states() != q.n_states() || p.n_actions() != q.n_actions())
    throw InvalidInput("kl_by_state: shape mismatch");
  const Matrix diff = p.log_probs() - q.log_probs();
  const Matrix probs = p.probs();
  Vector out(p.n_states());
  for (int s = 0; s < p.n_states(); ++s) out[s] = std::max(0.0, probs.row(s).dot(diff.row(s)));
  return out;
}

Matrix centered_logits(const Policy& policy) {
  Matrix theta = policy.log_probs();
  for (Eigen::Index s = 0; s < theta.rows(); ++s) theta.row(s).array() -= theta.row(s).mean();
  return theta;
}

Matrix transition_matrix(const TabularMdp& mdp, const Matrix& probs) {
  if (probs.rows() != mdp.n_states() || probs.cols() != mdp.n_actions())
    throw InvalidInput("policy shape does not match the MDP");
  Matrix out;
  kernels::policy_transition(mdp.transition(), probs, out);
  return out;
}

Matrix transition_matrix(const TabularMdp& mdp, const Policy& policy) {
  return transition_matrix(mdp, policy.probs());
}

Distribution discounted_visitation(const TabularMdp& mdp, const Policy& policy, const Distribution& rho) {
  return discounted_visitation(mdp, policy.probs(), rho);
}

Distribution discounted_visitation(const TabularMdp& mdp, const Matrix& probs, const Distribution& rho) {
  if (rho.size() != mdp.n_states()) throw InvalidInput("rho size does not match the MDP");
  const Matrix p_pi = transition_matrix(mdp, probs);
  if (mdp.gamma() == 0.0) return rho;
  const int n = mdp.n_states();
  const Matrix lhs = (Matrix::Identity(n, n) - mdp.gamma() * p_pi).transpose();
  const Vector rhs = (1.0 - mdp.gamma()) * rho.probs();
  const Vector d = lhs.partialPivLu().solve(rhs);
  const double residual = inf_norm(Vector(lhs * d - rhs));
  if (!(residual <= kSolveResidualTol)) throw NumericalError("visitation solve residual too large");
  return Distribution(clean_distribution(d));
}

Distribution stationary_distribution(const TabularMdp& mdp, const Policy& policy, double tol, int max_iter) {
  if (!(tol > 0.0) || max_iter < 1) throw InvalidInput("stationary_distribution: bad tolerance or budget");
  const Matrix p_pi = transition_matrix(mdp, policy);
  const int n = mdp.n_states();
  Eigen::RowVectorXd mu = Eigen::RowVectorXd::Constant(n, 1.0 / n);
  bool damped = false;
  double checkpoint = std::numeric_limits<double>::infinity();
  constexpr int kWindow = 64;
  for (int it = 1; it <= max_iter; ++it) {
    Eigen::RowVectorXd next = mu * p_pi;
    const double residual = (next - mu).cwiseAbs().maxCoeff();
    if (residual <= tol) return Distribution(clean_distribution(mu.transpose()));
    if (damped) next = 0.5 * (mu + next);
    mu = next / next.sum();
    if (it % kWindow == 0) {
      // Periodic chains keep the residual flat; the lazy chain has the same
      // stationary distribution and is aperiodic.
      if (!damped && residual > 0.9 * checkpoint) damped = true;
      checkpoint = residual;
    }
  }
  throw NonErgodicError("stationary distribution did not converge within " + std::to_string(max_iter) +
                        " iterations");
}

TabularMdp random_mdp(int n_states, int n_actions, double gamma, std::uint64_t seed) {
  if (n_states < 1 || n_actions < 1) throw InvalidInput("random_mdp: need n_states, n_actions >= 1");
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> unit_exp(1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Matrix transition(static_cast<Eigen::Index>(n_states) * n_actions, n_states);
  for (Eigen::Index row = 0; row < transition.rows(); ++row) {
    for (int sp = 0; sp < n_states; ++sp) transition(row, sp) = unit_exp(rng);
    transition.row(row) /= transition.row(row).sum();
  }
  Matrix reward(n_states, n_actions);
  for (int s = 0; s < n_states; ++s)
    for (int a = 0; a < n_actions; ++a) reward(s, a) = unit(rng);
  return TabularMdp(std::move(transition), std::move(reward), gamma);
}

}  // namespace softnpg
