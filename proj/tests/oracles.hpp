#pragma once

// Reference computations for the unit tests. Plain loops over std::vector,
// deliberately sharing no code with the library.

#include "softnpg/mdp.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace oracle {

using Table = std::vector<std::vector<double>>;

inline Table to_table(const softnpg::Matrix& m) {
  Table t(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) t[i][j] = m(i, j);
  return t;
}

inline double max_abs_diff(const softnpg::Matrix& a, const softnpg::Matrix& b) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) worst = std::max(worst, std::abs(a(i, j) - b(i, j)));
  return worst;
}

inline double max_abs_diff(const softnpg::Vector& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[static_cast<std::size_t>(i)]));
  return worst;
}

// V <- sum_a pi(a|s) [r(s,a) - tau log pi(a|s) + gamma sum_s' P v(s')], repeated.
inline std::vector<double> iterate_policy_value(const softnpg::TabularMdp& mdp, const Table& pi, double tau,
                                                int sweeps) {
  const int S = mdp.n_states(), A = mdp.n_actions();
  std::vector<double> v(S, 0.0), next(S);
  for (int k = 0; k < sweeps; ++k) {
    for (int s = 0; s < S; ++s) {
      double acc = 0.0;
      for (int a = 0; a < A; ++a) {
        if (pi[s][a] == 0.0) continue;
        double cont = 0.0;
        for (int sp = 0; sp < S; ++sp) cont += mdp.p(s, a, sp) * v[sp];
        acc += pi[s][a] * (mdp.reward()(s, a) - tau * std::log(pi[s][a]) + mdp.gamma() * cont);
      }
      next[s] = acc;
    }
    v.swap(next);
  }
  return v;
}

inline Table q_from_v(const softnpg::TabularMdp& mdp, const std::vector<double>& v) {
  const int S = mdp.n_states(), A = mdp.n_actions();
  Table q(S, std::vector<double>(A));
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) {
      double cont = 0.0;
      for (int sp = 0; sp < S; ++sp) cont += mdp.p(s, a, sp) * v[sp];
      q[s][a] = mdp.reward()(s, a) + mdp.gamma() * cont;
    }
  return q;
}

// Soft value iteration without max shifting; fine for the small values used here.
inline Table naive_soft_value_iteration(const softnpg::TabularMdp& mdp, double tau, int sweeps) {
  const int S = mdp.n_states(), A = mdp.n_actions();
  std::vector<double> v(S, 0.0);
  for (int k = 0; k < sweeps; ++k) {
    const Table q = q_from_v(mdp, v);
    for (int s = 0; s < S; ++s) {
      double z = 0.0;
      for (int a = 0; a < A; ++a) z += std::exp(q[s][a] / tau);
      v[s] = tau * std::log(z);
    }
  }
  return q_from_v(mdp, v);
}

// Best value per state over all |A|^|S| deterministic policies.
inline std::vector<double> brute_force_optimal_values(const softnpg::TabularMdp& mdp, int sweeps) {
  const int S = mdp.n_states(), A = mdp.n_actions();
  std::vector<double> best(S, -1e300);
  std::vector<int> choice(S, 0);
  while (true) {
    Table pi(S, std::vector<double>(A, 0.0));
    for (int s = 0; s < S; ++s) pi[s][choice[s]] = 1.0;
    const std::vector<double> v = iterate_policy_value(mdp, pi, 0.0, sweeps);
    for (int s = 0; s < S; ++s) best[s] = std::max(best[s], v[s]);
    int s = 0;
    while (s < S && ++choice[s] == A) choice[s++] = 0;
    if (s == S) break;
  }
  return best;
}

// (1-gamma) sum_t gamma^t rho^T P_pi^t, truncated after `terms` terms.
inline std::vector<double> visitation_series(const softnpg::TabularMdp& mdp, const Table& pi,
                                             const std::vector<double>& rho, int terms) {
  const int S = mdp.n_states(), A = mdp.n_actions();
  std::vector<double> d(S, 0.0), cur = rho, next(S);
  double weight = 1.0 - mdp.gamma();
  for (int t = 0; t < terms; ++t) {
    for (int s = 0; s < S; ++s) d[s] += weight * cur[s];
    std::fill(next.begin(), next.end(), 0.0);
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a)
        for (int sp = 0; sp < S; ++sp) next[sp] += cur[s] * pi[s][a] * mdp.p(s, a, sp);
    cur.swap(next);
    weight *= mdp.gamma();
  }
  return d;
}

inline softnpg::Matrix gaussian(int rows, int cols, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, scale);
  softnpg::Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = n(rng);
  return m;
}

inline softnpg::TabularMdp make_mdp(const Table& reward, const std::vector<Table>& transition, double gamma) {
  const int S = static_cast<int>(reward.size()), A = static_cast<int>(reward[0].size());
  softnpg::Matrix r(S, A), p(S * A, S);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) {
      r(s, a) = reward[s][a];
      for (int sp = 0; sp < S; ++sp) p(s * A + a, sp) = transition[s][a][sp];
    }
  return softnpg::TabularMdp(p, r, gamma);
}

// One state, |A| actions, reward r for every action.
inline softnpg::TabularMdp single_state(int actions, double r, double gamma) {
  return make_mdp(Table{std::vector<double>(actions, r)}, {Table(actions, std::vector<double>{1.0})}, gamma);
}

}  // namespace oracle
