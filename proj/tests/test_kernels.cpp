#include "doctest.h"
#include "oracles.hpp"

#include "softnpg/kernels.hpp"

using namespace softnpg;

namespace {

// Large enough to cross the parallel threshold.
constexpr int kRows = 3000;

Matrix row_stochastic(int rows, int cols, std::uint64_t seed) {
  Matrix m = oracle::gaussian(rows, cols, seed).array().abs().matrix();
  m.array() += 0.01;
  for (Eigen::Index i = 0; i < m.rows(); ++i) m.row(i) /= m.row(i).sum();
  return m;
}

}  // namespace

TEST_CASE("parallel kernels match the serial references bit for bit") {
  static_assert(kRows > kernels::kParallelRows);
  const int S = kRows, A = 3;
  const Matrix transition = row_stochastic(S * A, S, 1);
  const Matrix reward = oracle::gaussian(S, A, 2);
  const Matrix probs = row_stochastic(S, A, 3);
  const Vector v = oracle::gaussian(S, 1, 4);
  const Matrix q = 5.0 * oracle::gaussian(S, A, 5);

  Matrix a, b;
  kernels::serial::bellman_backup(transition, reward, 0.9, v, a);
  kernels::omp::bellman_backup(transition, reward, 0.9, v, b);
  CHECK(a == b);
  kernels::serial::policy_transition(transition, probs, a);
  kernels::omp::policy_transition(transition, probs, b);
  CHECK(a == b);
  kernels::serial::log_normalize_rows(q, a);
  kernels::omp::log_normalize_rows(q, b);
  CHECK(a == b);

  Vector x, y;
  kernels::serial::soft_state_values(q, 0.3, x);
  kernels::omp::soft_state_values(q, 0.3, y);
  CHECK(x == y);
  kernels::serial::hard_state_values(q, x);
  kernels::omp::hard_state_values(q, y);
  CHECK(x == y);
}

TEST_CASE("bellman backup and policy transition agree with explicit sums") {
  const int S = 6, A = 3;
  const Matrix transition = row_stochastic(S * A, S, 11);
  const Matrix reward = oracle::gaussian(S, A, 12);
  const Matrix probs = row_stochastic(S, A, 13);
  const Vector v = oracle::gaussian(S, 1, 14);
  Matrix q, p_pi;
  kernels::bellman_backup(transition, reward, 0.7, v, q);
  kernels::policy_transition(transition, probs, p_pi);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      double cont = 0.0;
      for (int sp = 0; sp < S; ++sp) cont += transition(s * A + a, sp) * v[sp];
      CHECK(q(s, a) == doctest::Approx(reward(s, a) + 0.7 * cont).epsilon(1e-14));
    }
    for (int sp = 0; sp < S; ++sp) {
      double expected = 0.0;
      for (int a = 0; a < A; ++a) expected += probs(s, a) * transition(s * A + a, sp);
      CHECK(p_pi(s, sp) == doctest::Approx(expected).epsilon(1e-14));
    }
  }
}

TEST_CASE("soft state values are a stable log-sum-exp") {
  Matrix q(3, 3);
  q << 0.0, 0.0, 0.0,
       1.0, 2.0, 3.0,
       800.0, 800.0, -800.0;
  Vector v;
  kernels::soft_state_values(q, 1.0, v);
  CHECK(v[0] == doctest::Approx(std::log(3.0)).epsilon(1e-15));
  CHECK(v[1] == doctest::Approx(std::log(std::exp(1.0) + std::exp(2.0) + std::exp(3.0))).epsilon(1e-15));
  CHECK(v[2] == doctest::Approx(800.0 + std::log(2.0)).epsilon(1e-15));

  // Small tau approaches the hard max from above.
  Vector hard;
  kernels::hard_state_values(q, hard);
  kernels::soft_state_values(q, 1e-6, v);
  CHECK((v - hard).maxCoeff() <= 1e-6 * std::log(3.0) + 1e-15);
  CHECK((v - hard).minCoeff() >= 0.0);
}

TEST_CASE("log-normalized rows exponentiate to distributions and ignore shifts") {
  const Matrix logits = 30.0 * oracle::gaussian(8, 5, 21);
  Matrix out, shifted_out;
  kernels::log_normalize_rows(logits, out);
  for (Eigen::Index s = 0; s < out.rows(); ++s) CHECK(out.row(s).array().exp().sum() == doctest::Approx(1.0).epsilon(1e-14));
  Matrix shifted = logits;
  shifted.array().colwise() += Eigen::ArrayXd::LinSpaced(8, -500.0, 500.0);
  kernels::log_normalize_rows(shifted, shifted_out);
  CHECK(oracle::max_abs_diff(out, shifted_out) <= 1e-12);
}

TEST_CASE("log_sum_exp handles extreme magnitudes") {
  Eigen::Vector3d x(1000.0, 1000.0, 1000.0);
  CHECK(kernels::log_sum_exp(x) == doctest::Approx(1000.0 + std::log(3.0)).epsilon(1e-15));
  Eigen::Vector2d y(-1000.0, -1000.0 + std::log(3.0));
  CHECK(kernels::log_sum_exp(y) == doctest::Approx(-1000.0 + std::log(4.0)).epsilon(1e-15));
}
