#include "doctest.h"
#include "oracles.hpp"

#include "softnpg/policy_eval.hpp"
#include "softnpg/soft_bellman.hpp"

using namespace softnpg;

TEST_CASE("soft Bellman operator on the zero table") {
  const TabularMdp mdp = random_mdp(4, 3, 0.9, 1);
  const Matrix t = soft_bellman_apply(mdp, 1.0, Matrix::Zero(4, 3));
  Matrix expected = mdp.reward();
  expected.array() += 0.9 * std::log(3.0);
  CHECK(oracle::max_abs_diff(t, expected) <= 1e-14);
}

TEST_CASE("small tau approaches the hard-max operator") {
  const TabularMdp mdp = random_mdp(5, 3, 0.9, 2);
  // Gap-separated: the maximizing action leads the rest by at least 1.
  Matrix q = Matrix::Zero(5, 3);
  for (int s = 0; s < 5; ++s) q(s, s % 3) = 1.0 + s;
  const Matrix soft = soft_bellman_apply(mdp, 1e-6, q);
  Matrix hard = mdp.reward();
  for (int s = 0; s < 5; ++s)
    for (int a = 0; a < 3; ++a)
      for (int sp = 0; sp < 5; ++sp) hard(s, a) += 0.9 * mdp.p(s, a, sp) * q.row(sp).maxCoeff();
  CHECK(oracle::max_abs_diff(soft, hard) <= 1e-4);
}

TEST_CASE("soft Bellman operator is a gamma contraction") {
  const TabularMdp mdp = random_mdp(6, 4, 0.95, 3);
  for (std::uint64_t k = 0; k < 50; ++k) {
    const Matrix q1 = oracle::gaussian(6, 4, 100 + k, 3.0);
    const Matrix q2 = oracle::gaussian(6, 4, 200 + k, 3.0);
    for (double tau : {0.01, 0.5, 2.0}) {
      const double lhs = oracle::max_abs_diff(soft_bellman_apply(mdp, tau, q1), soft_bellman_apply(mdp, tau, q2));
      CHECK(lhs <= 0.95 * oracle::max_abs_diff(q1, q2) + 1e-12);
    }
  }
}

TEST_CASE("symmetric single-state optimum") {
  const TabularMdp mdp = oracle::single_state(2, 1.0, 0.9);
  const SoftOptimum opt = solve_soft_optimum(mdp, 0.1);
  const double v = (1.0 + 0.1 * std::log(2.0)) / 0.1;
  CHECK(opt.v_star[0] == doctest::Approx(v).epsilon(1e-13));
  CHECK(opt.q_star(0, 0) == doctest::Approx(1.0 + 0.9 * v).epsilon(1e-13));
  CHECK(opt.q_star(0, 1) == doctest::Approx(1.0 + 0.9 * v).epsilon(1e-13));
  CHECK(opt.pi_star.probs()(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("bandit optimum is the reward softmax") {
  const Matrix r = (Matrix(1, 3) << 1.0, 0.9, 0.1).finished();
  const TabularMdp mdp(Matrix::Ones(3, 1), r, 0.0);
  const SoftOptimum opt = solve_soft_optimum(mdp, 1.0);
  CHECK(oracle::max_abs_diff(opt.q_star, r) <= 1e-14);
  const double z = std::exp(1.0) + std::exp(0.9) + std::exp(0.1);
  CHECK(opt.pi_star.probs()(0, 0) == doctest::Approx(std::exp(1.0) / z).epsilon(1e-14));
  CHECK(opt.pi_star.probs()(0, 1) == doctest::Approx(std::exp(0.9) / z).epsilon(1e-14));
}

TEST_CASE("soft optimum agrees with independent solvers") {
  const TabularMdp mdp = random_mdp(5, 3, 0.9, 7);
  const double tau = 0.2;
  const SoftOptimum opt = solve_soft_optimum(mdp, tau);
  CHECK(opt.residual <= 1e-12);

  SUBCASE("naive soft value iteration") {
    const oracle::Table q = oracle::naive_soft_value_iteration(mdp, tau, 600);
    for (int s = 0; s < 5; ++s)
      for (int a = 0; a < 3; ++a) CHECK(std::abs(opt.q_star(s, a) - q[s][a]) <= 1e-9);
  }
  SUBCASE("soft policy iteration from uniform") {
    oracle::Table pi(5, std::vector<double>(3, 1.0 / 3.0));
    oracle::Table q;
    for (int k = 0; k < 60; ++k) {
      q = oracle::q_from_v(mdp, oracle::iterate_policy_value(mdp, pi, tau, 600));
      for (int s = 0; s < 5; ++s) {
        double z = 0.0;
        for (int a = 0; a < 3; ++a) z += std::exp(q[s][a] / tau);
        for (int a = 0; a < 3; ++a) pi[s][a] = std::exp(q[s][a] / tau) / z;
      }
    }
    for (int s = 0; s < 5; ++s)
      for (int a = 0; a < 3; ++a) CHECK(std::abs(opt.q_star(s, a) - q[s][a]) <= 1e-8);
  }
  SUBCASE("consistency relations") {
    Vector lse(5);
    for (int s = 0; s < 5; ++s) lse[s] = tau * std::log((opt.q_star.row(s).array() / tau).exp().sum());
    CHECK((lse - opt.v_star).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(oracle::max_abs_diff(opt.pi_star.log_probs(), softmax_policy(opt.q_star / tau).log_probs()) <= 1e-12);
    // pi* evaluated under the regularized objective reproduces Q*.
    CHECK(oracle::max_abs_diff(evaluate_soft(mdp, opt.pi_star, tau).q, opt.q_star) <= 1e-10);
    REQUIRE(opt.mu_star.has_value());
    CHECK(opt.mu_star->probs().minCoeff() > 0.0);
  }
}

TEST_CASE("value iteration contracts every sweep") {
  const TabularMdp mdp = random_mdp(4, 3, 0.9, 9);
  const SoftOptimum ref = solve_soft_optimum(mdp, 0.5);
  std::vector<double> gaps;
  solve_soft_optimum(mdp, 0.5, 1e-10, [&](int, const Matrix& q) { gaps.push_back(oracle::max_abs_diff(q, ref.q_star)); });
  REQUIRE(gaps.size() > 2);
  for (std::size_t k = 1; k < gaps.size(); ++k) CHECK(gaps[k] <= 0.9 * gaps[k - 1] + 1e-12);
}

TEST_CASE("mu_star access") {
  const SoftOptimum opt = solve_soft_optimum(random_mdp(3, 2, 0.9, 4), 1.0);
  CHECK(opt.require_mu_star().size() == 3);
  SoftOptimum missing = opt;
  missing.mu_star.reset();
  missing.mu_star_issue = "test";
  CHECK_THROWS_AS(missing.require_mu_star(), NumericalError);
}

TEST_CASE("hard optimum matches brute-force enumeration") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const TabularMdp mdp = random_mdp(4, 3, 0.9, seed);
    const HardOptimum opt = solve_hard_optimum(mdp);
    const std::vector<double> best = oracle::brute_force_optimal_values(mdp, 600);
    CHECK(oracle::max_abs_diff(opt.v_star, best) <= 1e-9);
    const std::vector<double> greedy = oracle::iterate_policy_value(mdp, oracle::to_table(opt.greedy_probs()), 0.0, 600);
    CHECK(oracle::max_abs_diff(opt.v_star, greedy) <= 1e-9);
  }
}

TEST_CASE("optimum shift") {
  SUBCASE("equal temperatures") { CHECK(optimum_shift(random_mdp(3, 2, 0.9, 1), 0.3, 0.3) <= 2e-12); }
  SUBCASE("symmetric single state has a closed form") {
    const TabularMdp mdp = oracle::single_state(2, 1.0, 0.9);
    CHECK(optimum_shift(mdp, 0.1, 0.2) == doctest::Approx(0.1 * std::log(2.0) * 0.9 / 0.1).epsilon(1e-11));
  }
  SUBCASE("random instances respect the bound") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const TabularMdp mdp = random_mdp(5, 3, 0.9, seed);
      CHECK(optimum_shift(mdp, 1.0, 0.5) <= 0.5 * std::log(3.0) / 0.1 + 2e-12);
    }
  }
}

TEST_CASE("invalid temperatures") {
  const TabularMdp mdp = random_mdp(2, 2, 0.9, 1);
  CHECK_THROWS_AS(soft_bellman_apply(mdp, 0.0, Matrix::Zero(2, 2)), InvalidInput);
  CHECK_THROWS_AS(solve_soft_optimum(mdp, -1.0), InvalidInput);
}
