#include "softnpg/gradients.hpp"

#include "softnpg/optimizers.hpp"

#include <Eigen/SVD>

namespace softnpg {

namespace {

constexpr double kSingularCutoff = 1e-10;
constexpr double kRangeResidualTol = 1e-8;

Vector flatten(const Matrix& table) { return Eigen::Map<const Vector>(table.data(), table.size()); }

Matrix unflatten(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

void check_point(const TabularMdp& mdp, const ParamPoint& point) {
  if (point.theta.rows() != mdp.n_states() || point.theta.cols() != mdp.n_actions())
    throw InvalidInput("parameter shape does not match the MDP");
  if (point.rho.size() != mdp.n_states()) throw InvalidInput("rho size does not match the MDP");
}

}  // namespace

ParamPoint ParamPoint::from_logits(const Matrix& logits, Distribution rho) {
  if (!logits.allFinite()) throw InvalidInput("non-finite logits");
  Matrix theta = logits;
  for (Eigen::Index s = 0; s < theta.rows(); ++s) theta.row(s).array() -= theta.row(s).mean();
  return ParamPoint{std::move(theta), std::move(rho)};
}

ParamPoint ParamPoint::from_policy(const Policy& policy, Distribution rho) {
  return ParamPoint{centered_logits(policy), std::move(rho)};
}

Matrix FisherMatrix::apply(const Matrix& u) const {
  return unflatten(dense_ * flatten(u), u.rows(), u.cols());
}

Matrix soft_policy_gradient(const TabularMdp& mdp, const ParamPoint& point, double tau) {
  check_point(mdp, point);
  const Policy policy = point.policy();
  const SoftEval eval = evaluate_soft(mdp, policy, tau);
  const Distribution d = discounted_visitation(mdp, policy, point.rho);
  Matrix grad = policy.probs().cwiseProduct(eval.advantage);
  grad.array().colwise() *= d.probs().array();
  return grad / (1.0 - mdp.gamma());
}

FisherMatrix fisher_matrix(const TabularMdp& mdp, const ParamPoint& point) {
  check_point(mdp, point);
  const Policy policy = point.policy();
  const Matrix probs = policy.probs();
  const Distribution d = discounted_visitation(mdp, policy, point.rho);
  const int n_actions = mdp.n_actions();
  const Eigen::Index dim = static_cast<Eigen::Index>(mdp.n_states()) * n_actions;
  Matrix dense = Matrix::Zero(dim, dim);
#pragma omp parallel for schedule(static) if (mdp.n_states() >= 256)
  for (int s = 0; s < mdp.n_states(); ++s) {
    const Eigen::RowVectorXd pi = probs.row(s);
    auto block = dense.block(static_cast<Eigen::Index>(s) * n_actions, static_cast<Eigen::Index>(s) * n_actions,
                             n_actions, n_actions);
    // Only the block of the visited state carries a nonzero score.
    for (int a = 0; a < n_actions; ++a) {
      Eigen::RowVectorXd score = -pi;
      score[a] += 1.0;
      block.noalias() += d[s] * pi[a] * (score.transpose() * score);
    }
  }
  return FisherMatrix(std::move(dense), n_actions);
}

Matrix npg_direction(const TabularMdp& mdp, const ParamPoint& point, double tau) {
  const Matrix grad = soft_policy_gradient(mdp, point, tau);
  const FisherMatrix fisher = fisher_matrix(mdp, point);
  const Vector g = flatten(grad);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(fisher.dense(), Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(kSingularCutoff);
  const Vector w = svd.solve(g);
  const double residual = (fisher.dense() * w - g).norm();
  if (residual > kRangeResidualTol * g.norm() + 1e-14)
    throw NumericalError("policy gradient is not in the range of the Fisher matrix");
  return unflatten(w, grad.rows(), grad.cols());
}

Matrix center_by_policy(const Matrix& table, const Policy& policy) {
  if (table.rows() != policy.n_states() || table.cols() != policy.n_actions())
    throw InvalidInput("center_by_policy: shape mismatch");
  const Matrix probs = policy.probs();
  Matrix out = table;
  for (Eigen::Index s = 0; s < out.rows(); ++s) out.row(s).array() -= probs.row(s).dot(table.row(s));
  return out;
}

StepEquivalence parameter_step_equivalence(const TabularMdp& mdp, const ParamPoint& point, double tau, double eta) {
  const Policy start = point.policy();
  const Matrix direction = npg_direction(mdp, point, tau);
  Policy param_path = softmax_policy(Matrix(point.theta + eta * direction));
  Policy policy_path = npg_step(mdp, start, evaluate_soft(mdp, start, tau).q, tau, eta);
  const double discrepancy = inf_norm(Matrix(param_path.log_probs() - policy_path.log_probs()));
  return StepEquivalence{std::move(param_path), std::move(policy_path), discrepancy};
}

}  // namespace softnpg
