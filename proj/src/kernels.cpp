#include "softnpg/kernels.hpp"

#include <cmath>

namespace softnpg::kernels {

namespace {

// Index of the largest entry and log(sum_a exp((row[a] - max)/scale)), the
// latter via log1p over the non-maximal terms so near-deterministic rows keep
// full relative precision.
struct RowLse {
  double max;
  double log_sum;
};

RowLse row_lse(const double* row, Eigen::Index n, double scale) {
  Eigen::Index k = 0;
  for (Eigen::Index a = 1; a < n; ++a)
    if (row[a] > row[k]) k = a;
  const double m = row[k];
  double rest = 0.0;
  for (Eigen::Index a = 0; a < n; ++a)
    if (a != k) rest += std::exp((row[a] - m) / scale);
  return {m, std::log1p(rest)};
}

double row_soft_value(const double* row, Eigen::Index n, double tau) {
  const RowLse l = row_lse(row, n, tau);
  return l.max + tau * l.log_sum;
}

void row_log_normalize(const double* in, double* out, Eigen::Index n) {
  const RowLse l = row_lse(in, n, 1.0);
  for (Eigen::Index a = 0; a < n; ++a) out[a] = (in[a] - l.max) - l.log_sum;
}

}  // namespace

namespace serial {

void bellman_backup(const Matrix& transition, const Matrix& reward, double gamma, const Vector& v,
                    Matrix& out) {
  const Eigen::Index n_states = reward.rows();
  const Eigen::Index n_actions = reward.cols();
  out.resize(n_states, n_actions);
  for (Eigen::Index s = 0; s < n_states; ++s) {
    for (Eigen::Index a = 0; a < n_actions; ++a) {
      const double* p = transition.data() + (s * n_actions + a) * transition.cols();
      double acc = 0.0;
      for (Eigen::Index sp = 0; sp < transition.cols(); ++sp) acc += p[sp] * v[sp];
      out(s, a) = reward(s, a) + gamma * acc;
    }
  }
}

void soft_state_values(const Matrix& q, double tau, Vector& out) {
  out.resize(q.rows());
  for (Eigen::Index s = 0; s < q.rows(); ++s) out[s] = row_soft_value(q.data() + s * q.cols(), q.cols(), tau);
}

void hard_state_values(const Matrix& q, Vector& out) {
  out.resize(q.rows());
  for (Eigen::Index s = 0; s < q.rows(); ++s) out[s] = q.row(s).maxCoeff();
}

void policy_transition(const Matrix& transition, const Matrix& probs, Matrix& out) {
  const Eigen::Index n_states = probs.rows();
  const Eigen::Index n_actions = probs.cols();
  out.setZero(n_states, n_states);
  for (Eigen::Index s = 0; s < n_states; ++s) {
    for (Eigen::Index a = 0; a < n_actions; ++a) {
      const double w = probs(s, a);
      const double* p = transition.data() + (s * n_actions + a) * n_states;
      for (Eigen::Index sp = 0; sp < n_states; ++sp) out(s, sp) += w * p[sp];
    }
  }
}

void log_normalize_rows(const Matrix& logits, Matrix& out) {
  out.resize(logits.rows(), logits.cols());
  for (Eigen::Index s = 0; s < logits.rows(); ++s)
    row_log_normalize(logits.data() + s * logits.cols(), out.data() + s * out.cols(), logits.cols());
}

}  // namespace serial

namespace omp {

void bellman_backup(const Matrix& transition, const Matrix& reward, double gamma, const Vector& v,
                    Matrix& out) {
  const Eigen::Index n_states = reward.rows();
  const Eigen::Index n_actions = reward.cols();
  const Eigen::Index rows = n_states * n_actions;
  const Eigen::Index width = transition.cols();
  out.resize(n_states, n_actions);
  double* dst = out.data();
  const double* r = reward.data();
#pragma omp parallel for schedule(static) if (rows >= kParallelRows)
  for (Eigen::Index row = 0; row < rows; ++row) {
    const double* p = transition.data() + row * width;
    double acc = 0.0;
    for (Eigen::Index sp = 0; sp < width; ++sp) acc += p[sp] * v[sp];
    dst[row] = r[row] + gamma * acc;
  }
}

void soft_state_values(const Matrix& q, double tau, Vector& out) {
  const Eigen::Index n = q.rows();
  out.resize(n);
#pragma omp parallel for schedule(static) if (n >= kParallelRows)
  for (Eigen::Index s = 0; s < n; ++s) out[s] = row_soft_value(q.data() + s * q.cols(), q.cols(), tau);
}

void hard_state_values(const Matrix& q, Vector& out) {
  const Eigen::Index n = q.rows();
  out.resize(n);
#pragma omp parallel for schedule(static) if (n >= kParallelRows)
  for (Eigen::Index s = 0; s < n; ++s) out[s] = q.row(s).maxCoeff();
}

void policy_transition(const Matrix& transition, const Matrix& probs, Matrix& out) {
  const Eigen::Index n_states = probs.rows();
  const Eigen::Index n_actions = probs.cols();
  out.resize(n_states, n_states);
#pragma omp parallel for schedule(static) if (n_states * n_actions >= kParallelRows)
  for (Eigen::Index s = 0; s < n_states; ++s) {
    double* dst = out.data() + s * n_states;
    for (Eigen::Index sp = 0; sp < n_states; ++sp) dst[sp] = 0.0;
    for (Eigen::Index a = 0; a < n_actions; ++a) {
      const double w = probs(s, a);
      const double* p = transition.data() + (s * n_actions + a) * n_states;
      for (Eigen::Index sp = 0; sp < n_states; ++sp) dst[sp] += w * p[sp];
    }
  }
}

void log_normalize_rows(const Matrix& logits, Matrix& out) {
  const Eigen::Index n = logits.rows();
  out.resize(n, logits.cols());
#pragma omp parallel for schedule(static) if (n >= kParallelRows)
  for (Eigen::Index s = 0; s < n; ++s)
    row_log_normalize(logits.data() + s * logits.cols(), out.data() + s * out.cols(), logits.cols());
}

}  // namespace omp

}  // namespace softnpg::kernels
