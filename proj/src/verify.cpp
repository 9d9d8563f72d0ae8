#include "softnpg/verify.hpp"

#include "softnpg/gradients.hpp"
#include "softnpg/kernels.hpp"
#include "softnpg/optimizers.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <sstream>

namespace softnpg {

namespace {

constexpr double kFloor = 1e-12;
constexpr double kQuadraticFloor = 1e-13;
const double kTaus[] = {1.0, 0.1, 0.01};
const double kFractions[] = {0.1, 0.5, 1.0};
const double kGammas[] = {0.8, 0.9, 0.95};

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Matrix gaussian_matrix(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

Policy random_policy(int states, int actions, std::uint64_t seed) {
  return softmax_policy(gaussian_matrix(states, actions, seed));
}

Distribution random_distribution(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.1, 1.0);
  Vector w(n);
  for (int i = 0; i < n; ++i) w[i] = unit(rng);
  return Distribution(w / w.sum());
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3e", v);
  return buf;
}

class Tally {
 public:
  /// metric <= bound + tol, skipped when metric < floor.
  void bound(double metric, double bound, double tol, double floor, const std::string& where) {
    if (metric < floor) {
      ++floored_;
      return;
    }
    record(metric <= bound + tol, metric - bound, [&] {
      return where + ": " + sci(metric) + " > " + sci(bound) + " + " + sci(tol);
    });
  }

  /// |a - b| <= tol.
  void close(double a, double b, double tol, const std::string& where) {
    const double diff = std::abs(a - b);
    record(diff <= tol, diff - tol, [&] { return where + ": |" + sci(a) + " - " + sci(b) + "| > " + sci(tol); });
  }

  void require(bool ok, const std::string& what) {
    record(ok, ok ? -1.0 : 1.0, [&] { return what; });
  }

  CriterionResult finish(int id, std::string name, std::string note = {}) const {
    CriterionResult r;
    r.id = id;
    r.name = std::move(name);
    r.checks = checks_;
    r.floored = floored_;
    r.failures = failures_;
    r.worst_excess = checks_ > 0 ? worst_ : 0.0;
    r.passed = failures_ == 0 && checks_ > 0;
    r.detail = failures_ > 0 ? first_failure_ : (checks_ == 0 ? "no comparisons were made" : std::move(note));
    return r;
  }

 private:
  template <class Describe>
  void record(bool ok, double excess, Describe&& describe) {
    ++checks_;
    if (!(excess <= worst_)) worst_ = std::isnan(excess) ? std::numeric_limits<double>::infinity() : excess;
    if (!ok) {
      if (failures_ == 0) first_failure_ = describe();
      ++failures_;
    }
  }

  long checks_ = 0;
  long floored_ = 0;
  long failures_ = 0;
  double worst_ = -std::numeric_limits<double>::infinity();
  std::string first_failure_;
};

struct Member {
  TabularMdp mdp;
  std::uint64_t seed;
  std::string label;
};

std::vector<Member> ensemble(const VerifyOptions& options) {
  static const int kSizes[][2] = {{4, 3}, {10, 4}, {20, 6}, {30, 8}, {5, 2}};
  const int count = options.quick ? 5 : 25;
  std::vector<Member> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    const int states = options.quick ? 4 : kSizes[i % 5][0];
    const int actions = options.quick ? 3 : kSizes[i % 5][1];
    const double gamma = kGammas[i % 3];
    const std::uint64_t seed = mix(options.seed, static_cast<std::uint64_t>(i));
    std::ostringstream label;
    label << "mdp" << i << "(" << states << "x" << actions << ",g=" << gamma << ")";
    out.push_back(Member{random_mdp(states, actions, gamma, seed), seed, label.str()});
  }
  return out;
}

int ensemble_iters(const VerifyOptions& options) { return options.quick ? 300 : 500; }

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string where(const Member& m, double tau, double frac, int t) {
  std::ostringstream os;
  os << m.label << " tau=" << tau << " frac=" << frac << " t=" << t;
  return os.str();
}

// ---------------------------------------------------------------------------

CriterionResult theorem1(const VerifyOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  Tally tally;
  const int iters = ensemble_iters(options);
  for (const Member& m : ensemble(options)) {
    const double gamma = m.mdp.gamma();
    for (int ti = 0; ti < 3; ++ti) {
      const double tau = kTaus[ti];
      const SoftOptimum oracle = solve_soft_optimum(m.mdp, tau);
      for (int fi = 0; fi < 3; ++fi) {
        const double eta = kFractions[fi] * spi_step_size(gamma, tau);
        const Policy init = random_policy(m.mdp.n_states(), m.mdp.n_actions(), mix(m.seed, 10 * ti + fi));
        const IterTrace trace = run_npg(m.mdp, NpgConfig::create(gamma, tau, eta, iters, init), oracle,
                                        Distribution::uniform(m.mdp.n_states()));
        const double c1 = trace.c1;
        const double rate = 1.0 - eta * tau;
        for (int t = 0; t < iters; ++t) {
          const IterRecord& rec = trace.records[static_cast<std::size_t>(t) + 1];
          const double decay = std::pow(rate, t);
          const std::string at = where(m, tau, kFractions[fi], t + 1);
          tally.bound(rec.q_gap, c1 * gamma * decay, 1e-8 * (1.0 + c1), kFloor, at + " q_gap");
          tally.bound(rec.logpi_gap, 2.0 * c1 / tau * decay, 1e-8, kFloor, at + " logpi_gap");
          tally.bound(rec.v_gap, 3.0 * c1 * gamma * decay, 1e-8 * (1.0 + c1), kFloor, at + " v_gap");
        }
      }
    }
  }
  const double elapsed = seconds_since(start);
  tally.require(elapsed < 60.0, "runtime " + sci(elapsed) + " s exceeds 60 s");
  return tally.finish(1, "exact NPG linear bound");
}

CriterionResult spi_contraction(const VerifyOptions& options) {
  Tally tally;
  const int iters = ensemble_iters(options);
  for (const Member& m : ensemble(options)) {
    const double gamma = m.mdp.gamma();
    for (int ti = 0; ti < 3; ++ti) {
      const double tau = kTaus[ti];
      const SoftOptimum oracle = solve_soft_optimum(m.mdp, tau);
      const Policy init = random_policy(m.mdp.n_states(), m.mdp.n_actions(), mix(m.seed, 100 + ti));
      const IterTrace trace = run_npg(m.mdp, NpgConfig::create(gamma, tau, spi_step_size(gamma, tau), iters, init),
                                      oracle, Distribution::uniform(m.mdp.n_states()));
      for (int t = 0; t < iters; ++t) {
        const double prev = trace.records[static_cast<std::size_t>(t)].q_gap;
        const double next = trace.records[static_cast<std::size_t>(t) + 1].q_gap;
        // The ratio is only defined while the denominator sits above the floor.
        tally.bound(prev < kFloor ? 0.0 : next, gamma * prev, 1e-9 * prev, kFloor,
                    where(m, tau, 1.0, t + 1) + " contraction");
      }
    }
  }
  return tally.finish(2, "SPI per-step contraction");
}

CriterionResult bandit(const VerifyOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  Tally tally;
  Vector rewards(3);
  rewards << 1.0, 0.9, 0.1;
  const int iters = 200;
  std::vector<Vector> inits;
  inits.push_back(Vector::Constant(3, -std::log(3.0)));
  for (int k = 0; k < 3; ++k) {
    const Matrix logits = gaussian_matrix(1, 3, mix(options.seed, 200 + k));
    Matrix log_probs;
    kernels::log_normalize_rows(logits, log_probs);
    inits.push_back(log_probs.row(0).transpose());
  }
  for (double tau : {0.1, 1.0}) {
    for (double eta : {0.1, 1.0 / tau}) {
      for (std::size_t k = 0; k < inits.size(); ++k) {
        const IterTrace trace = run_bandit(rewards, tau, eta, inits[k], iters);
        const double gap0 = trace.records[0].logpi_gap;
        std::ostringstream at;
        at << "bandit tau=" << tau << " eta=" << eta << " init=" << k;
        for (int t = 0; t <= iters; ++t) {
          const double gap = trace.records[static_cast<std::size_t>(t)].logpi_gap;
          tally.bound(gap, 2.0 * std::pow(1.0 - tau * eta, t) * gap0, 1e-10, 0.0,
                      at.str() + " t=" + std::to_string(t));
        }
        if (eta * tau == 1.0) tally.bound(trace.records[1].logpi_gap, 0.0, 1e-10, 0.0, at.str() + " one-step");
      }
    }
  }
  const double elapsed = seconds_since(start);
  tally.require(elapsed < 1.0, "runtime " + sci(elapsed) + " s exceeds 1 s");
  return tally.finish(3, "bandit log-policy bound");
}

CriterionResult theorem2(const VerifyOptions& options) {
  Tally tally;
  const int iters = 400;
  const std::size_t tail = static_cast<std::size_t>(iters) * 3 / 4;
  for (double delta : {1e-3, 1e-2}) {
    for (int run = 0; run < 10; ++run) {
      const std::uint64_t seed = mix(options.seed, 300 + run);
      const bool small = options.quick || run % 2 == 0;
      const TabularMdp mdp = random_mdp(small ? 4 : 8, small ? 3 : 4, 0.9, seed);
      const double tau = run % 2 == 0 ? 1.0 : 0.1;
      const double frac = run % 3 == 0 ? 0.5 : 1.0;
      const double eta = frac * spi_step_size(mdp.gamma(), tau);
      const SoftOptimum oracle = solve_soft_optimum(mdp, tau);
      const Policy init = random_policy(mdp.n_states(), mdp.n_actions(), mix(seed, 1));
      const NpgConfig config =
          NpgConfig::create(mdp.gamma(), tau, eta, iters, init, NoiseConfig{delta, mix(seed, 2), NoiseMode::kUniform});
      const IterTrace trace = run_npg(mdp, config, oracle, Distribution::uniform(mdp.n_states()));
      const double gamma = mdp.gamma();
      std::ostringstream at;
      at << "delta=" << delta << " run=" << run << " tau=" << tau << " frac=" << frac;
      double floor_seen = 0.0;
      for (int t = 0; t < iters; ++t) {
        const IterRecord& rec = trace.records[static_cast<std::size_t>(t) + 1];
        const double core = std::pow(1.0 - eta * tau, t) * trace.c1 + trace.c2;
        tally.bound(rec.q_gap, gamma * core, 1e-8, kFloor, at.str() + " t=" + std::to_string(t + 1) + " q_gap");
        tally.bound(rec.logpi_gap, 2.0 / tau * core, 1e-8, kFloor,
                    at.str() + " t=" + std::to_string(t + 1) + " logpi_gap");
        if (static_cast<std::size_t>(t) + 1 >= tail) floor_seen = std::max(floor_seen, rec.q_gap);
      }
      tally.bound(floor_seen, gamma * trace.c2, 1e-8, 0.0, at.str() + " asymptotic floor");
    }
  }
  return tally.finish(4, "inexact NPG bound and floor");
}

// Checks kappa g_{t+1} <= (kappa g_t)^2 and the rho-bound along a trace that
// starts inside the regime.
void check_quadratic(Tally& tally, const TabularMdp& mdp, const SoftOptimum& oracle, const Policy& init, int iters,
                     const std::string& label) {
  const Distribution& mu = oracle.require_mu_star();
  const Distribution rho = Distribution::uniform(mdp.n_states());
  IterTrace trace;
  try {
    trace = quadratic_regime_trace(mdp, oracle.tau, init, iters, oracle, rho);
  } catch (const RegimeNotEntered& e) {
    tally.require(false, label + ": " + e.what());
    return;
  }
  const double kappa = *trace.kappa;
  const double v_mu = oracle.v_star.dot(mu.probs());
  const double ratio = (rho.probs().array() / mu.probs().array()).maxCoeff();
  const double v_rho = oracle.v_star.dot(rho.probs());
  const double g0 = v_mu - *trace.records[0].value_at_mu;
  tally.require(kappa * g0 < 1.0, label + ": kappa*g0 >= 1");
  tally.require(trace.records[0].logpi_gap <= 1.0, label + ": initial log-policy gap above 1");
  for (std::size_t t = 0; t + 1 < trace.records.size(); ++t) {
    const double g = v_mu - *trace.records[t].value_at_mu;
    const double g_next = v_mu - *trace.records[t + 1].value_at_mu;
    const std::string at = label + " t=" + std::to_string(t + 1);
    tally.bound(kappa * g_next, (kappa * g) * (kappa * g), 1e-9, kappa * kQuadraticFloor, at + " squared");
    const double rho_gap = v_rho - trace.records[t + 1].value_at_rho;
    const double rho_bound = ratio / kappa * std::pow(kappa * g0, std::pow(2.0, static_cast<double>(t + 1)));
    tally.bound(rho_gap, rho_bound, 1e-9, kQuadraticFloor, at + " rho gap");
  }
}

CriterionResult quadratic(const VerifyOptions& options) {
  Tally tally;
  const double tau = 1.0;
  const int iters = 12;
  int minimal_starts = 0;
  long warm_total = 0;
  for (int i = 0; i < 5; ++i) {
    const std::uint64_t seed = mix(options.seed, 400 + i);
    const TabularMdp mdp = random_mdp(4, 2, 0.8, seed);
    const SoftOptimum oracle = solve_soft_optimum(mdp, tau);
    const std::string label = "mdp" + std::to_string(i);
    const Policy uniform = Policy::uniform(mdp.n_states(), mdp.n_actions());

    // Default warm start of 200 SPI iterations.
    check_quadratic(tally, mdp, oracle, spi_warm_start(mdp, tau, 200, uniform), iters, label + " warm=200");

    // Shortest warm start satisfying the preconditions, so the squared
    // contraction is exercised above the floor.
    const Distribution& mu = oracle.require_mu_star();
    const double kappa = quadratic_kappa(mdp.gamma(), tau, mu);
    const double v_mu = oracle.v_star.dot(mu.probs());
    Policy policy = uniform;
    for (int k = 0; k <= 200; ++k) {
      const SoftEval eval = evaluate_soft(mdp, policy, tau);
      const double logpi_gap = inf_norm(Matrix(oracle.pi_star.log_probs() - policy.log_probs()));
      if (logpi_gap <= 1.0 && kappa * (v_mu - eval.value_at(mu)) < 1.0) {
        check_quadratic(tally, mdp, oracle, policy, iters, label + " warm=" + std::to_string(k));
        ++minimal_starts;
        warm_total += k;
        break;
      }
      policy = npg_step(mdp, policy, eval.q, tau, spi_step_size(mdp.gamma(), tau));
    }
  }
  tally.require(minimal_starts == 5, "a minimal warm start did not enter the regime within 200 iterations");
  return tally.finish(5, "quadratic regime", "minimal warm starts total " + std::to_string(warm_total) + " SPI steps");
}

CriterionResult bellman_operator(const VerifyOptions& options) {
  Tally tally;
  for (const Member& m : ensemble(options)) {
    const int s = m.mdp.n_states();
    const int a = m.mdp.n_actions();
    const double gamma = m.mdp.gamma();
    const double scale = 1.0 / (1.0 - gamma);
    for (int ti = 0; ti < 3; ++ti) {
      const double tau = kTaus[ti];
      const SoftOptimum oracle = solve_soft_optimum(m.mdp, tau);
      const double residual = inf_norm(Matrix(soft_bellman_apply(m.mdp, tau, oracle.q_star) - oracle.q_star));
      tally.bound(residual, 0.0, 1e-12, 0.0, m.label + " tau=" + std::to_string(tau) + " fixed-point residual");
      std::mt19937_64 rng(mix(m.seed, 500 + ti));
      std::uniform_real_distribution<double> unit(-scale, 2.0 * scale);
      for (int pair = 0; pair < 200; ++pair) {
        Matrix q1(s, a), q2(s, a);
        for (int i = 0; i < s; ++i)
          for (int j = 0; j < a; ++j) {
            q1(i, j) = unit(rng);
            q2(i, j) = unit(rng);
          }
        const double lhs = inf_norm(Matrix(soft_bellman_apply(m.mdp, tau, q1) - soft_bellman_apply(m.mdp, tau, q2)));
        tally.bound(lhs, gamma * inf_norm(Matrix(q1 - q2)), 1e-12, 0.0,
                    m.label + " tau=" + std::to_string(tau) + " pair=" + std::to_string(pair));
      }
    }
    // Gap-separated inputs: each row is a shuffled ladder with spacing >= 0.01.
    std::mt19937_64 rng(mix(m.seed, 599));
    for (int trial = 0; trial < 20; ++trial) {
      Matrix q(s, a);
      std::vector<double> ladder(static_cast<std::size_t>(a));
      std::uniform_real_distribution<double> offset(0.0, scale);
      for (int i = 0; i < s; ++i) {
        for (int j = 0; j < a; ++j) ladder[static_cast<std::size_t>(j)] = 0.01 * (j + 1) * (1 + trial % 3);
        std::shuffle(ladder.begin(), ladder.end(), rng);
        const double base = offset(rng);
        for (int j = 0; j < a; ++j) q(i, j) = base + ladder[static_cast<std::size_t>(j)];
      }
      const double diff = inf_norm(Matrix(soft_bellman_apply(m.mdp, 1e-6, q) - hard_bellman_apply(m.mdp, q)));
      tally.bound(diff, 0.0, 1e-4, 0.0, m.label + " tau->0 trial=" + std::to_string(trial));
    }
  }
  return tally.finish(6, "soft Bellman operator");
}

CriterionResult improvement_identity(const VerifyOptions& options) {
  Tally tally;
  const int iters = std::min(ensemble_iters(options), 150);
  for (const Member& m : ensemble(options)) {
    const double gamma = m.mdp.gamma();
    const std::vector<Distribution> rhos = {Distribution::uniform(m.mdp.n_states()),
                                            Distribution::point(m.mdp.n_states(), 0)};
    for (int ti = 0; ti < 3; ++ti) {
      const double tau = kTaus[ti];
      const SoftOptimum oracle = solve_soft_optimum(m.mdp, tau);
      for (int fi = 0; fi < 3; ++fi) {
        const double eta = kFractions[fi] * spi_step_size(gamma, tau);
        const double forward_weight = 1.0 / eta - tau / (1.0 - gamma);
        const Policy init = random_policy(m.mdp.n_states(), m.mdp.n_actions(), mix(m.seed, 700 + 10 * ti + fi));
        auto observer = [&](const NpgStepView& step) {
          const std::string at = where(m, tau, kFractions[fi], step.t + 1);
          const Vector kl_fwd = kl_by_state(step.next, step.current);
          const Vector kl_back = kl_by_state(step.current, step.next);
          const Vector per_state = forward_weight * kl_fwd + kl_back / eta;
          for (std::size_t r = 0; r < rhos.size(); ++r) {
            const double lhs = step.next_eval.value_at(rhos[r]) - step.current_eval.value_at(rhos[r]);
            const Distribution d = discounted_visitation(m.mdp, step.next, rhos[r]);
            tally.close(lhs, d.expect(per_state), 1e-7, at + " rho=" + std::to_string(r) + " identity");
          }
          const double drop = (step.current_eval.v - step.next_eval.v).maxCoeff();
          tally.bound(drop, 0.0, 1e-9, -std::numeric_limits<double>::infinity(), at + " monotone V");
        };
        run_npg(m.mdp, NpgConfig::create(gamma, tau, eta, iters, init), oracle, rhos[0], observer);
      }
    }
  }
  return tally.finish(7, "performance-improvement identity");
}

CriterionResult xi_and_gap(const VerifyOptions& options) {
  Tally tally;
  const int iters = ensemble_iters(options);
  for (const Member& m : ensemble(options)) {
    const double gamma = m.mdp.gamma();
    const Distribution rho = Distribution::uniform(m.mdp.n_states());
    for (int ti = 0; ti < 3; ++ti) {
      const double tau = kTaus[ti];
      const SoftOptimum oracle = solve_soft_optimum(m.mdp, tau);
      const Distribution d_star = discounted_visitation(m.mdp, oracle.pi_star, rho);
      const double v_star_rho = oracle.v_star.dot(rho.probs());
      for (int fi = 0; fi < 3; ++fi) {
        const double eta = kFractions[fi] * spi_step_size(gamma, tau);
        const Policy init = random_policy(m.mdp.n_states(), m.mdp.n_actions(), mix(m.seed, 800 + 10 * ti + fi));
        const NpgConfig config = NpgConfig::create(gamma, tau, eta, iters, init, std::nullopt, true);
        const bool spi = config.alpha(gamma) == 0.0;
        NpgObserver observer;
        if (spi) {
          observer = [&](const NpgStepView& step) {
            const double gap = v_star_rho - step.current_eval.value_at(rho);
            const double bound = d_star.expect(kl_by_state(step.current, step.next)) / eta;
            tally.bound(gap, bound, 1e-7, -std::numeric_limits<double>::infinity(),
                        where(m, tau, 1.0, step.t) + " suboptimality gap");
          };
        }
        const IterTrace trace = run_npg(m.mdp, config, oracle, rho, observer);
        const double alpha = trace.alpha();
        for (int t = 0; t < iters; ++t) {
          const IterRecord& rec = trace.records[static_cast<std::size_t>(t) + 1];
          const std::string at = where(m, tau, kFractions[fi], t + 1);
          const double bound = gamma * *rec.xi_gap + gamma * std::pow(alpha, t + 1) * *trace.xi_init_gap;
          tally.bound(rec.q_gap, bound, 1e-7, -std::numeric_limits<double>::infinity(), at + " xi recursion");
          tally.bound(*rec.xi_policy_mismatch, 0.0, 1e-7, -std::numeric_limits<double>::infinity(),
                      at + " xi normalization");
        }
      }
    }
  }
  return tally.finish(8, "xi recursion and SPI gap");
}

CriterionResult gradient_checks(const VerifyOptions& options) {
  Tally tally;
  const double h = 1e-6;
  for (int i = 0; i < 20; ++i) {
    const std::uint64_t seed = mix(options.seed, 900 + i);
    const bool small = i % 2 == 0;
    const TabularMdp mdp = random_mdp(small ? 3 : 4, small ? 2 : 3, i % 3 == 0 ? 0.9 : 0.8, seed);
    const double tau = i % 4 < 2 ? 1.0 : 0.1;
    const Matrix theta = gaussian_matrix(mdp.n_states(), mdp.n_actions(), mix(seed, 1));
    const Distribution rho = random_distribution(mdp.n_states(), mix(seed, 2));
    const Matrix analytic = soft_policy_gradient(mdp, ParamPoint::from_logits(theta, rho), tau);
    auto objective = [&](const Matrix& logits) {
      return evaluate_soft(mdp, softmax_policy(logits), tau).value_at(rho);
    };
    for (int s = 0; s < mdp.n_states(); ++s)
      for (int a = 0; a < mdp.n_actions(); ++a) {
        Matrix plus = theta, minus = theta;
        plus(s, a) += h;
        minus(s, a) -= h;
        const double fd = (objective(plus) - objective(minus)) / (2.0 * h);
        const double rel = std::abs(analytic(s, a) - fd) / (1.0 + std::abs(analytic(s, a)));
        tally.bound(rel, 0.0, 1e-5, 0.0,
                    "triple " + std::to_string(i) + " entry (" + std::to_string(s) + "," + std::to_string(a) + ")");
      }
  }
  for (int i = 0; i < 4; ++i) {
    const std::uint64_t seed = mix(options.seed, 950 + i);
    const TabularMdp mdp = random_mdp(i % 2 == 0 ? 4 : 5, 3, kGammas[i % 3], seed);
    const ParamPoint point = ParamPoint::from_logits(gaussian_matrix(mdp.n_states(), mdp.n_actions(), mix(seed, 1)),
                                                     random_distribution(mdp.n_states(), mix(seed, 2)));
    for (double tau : kTaus)
      for (double frac : kFractions) {
        const double eta = frac * spi_step_size(mdp.gamma(), tau);
        const StepEquivalence eq = parameter_step_equivalence(mdp, point, tau, eta);
        std::ostringstream at;
        at << "step mdp" << i << " tau=" << tau << " frac=" << frac;
        tally.bound(eq.discrepancy, 0.0, 1e-7, 0.0, at.str());
      }
  }
  return tally.finish(9, "gradient and parameter-step checks");
}

CriterionResult cpi(const VerifyOptions& options) {
  Tally tally;
  const double tau = 0.5;
  const int iters = options.quick ? 200 : 300;
  for (int i = 0; i < 10; ++i) {
    const std::uint64_t seed = mix(options.seed, 1000 + i);
    const TabularMdp mdp = random_mdp(5, 3, i % 2 == 0 ? 0.8 : 0.9, seed);
    const SoftOptimum oracle = solve_soft_optimum(mdp, tau);
    const Distribution& mu = oracle.require_mu_star();
    const Policy init = random_policy(mdp.n_states(), mdp.n_actions(), mix(seed, 1));
    const std::vector<Distribution> rhos = {mu, Distribution::uniform(mdp.n_states()),
                                            Distribution::point(mdp.n_states(), i % mdp.n_states())};
    for (double beta : {0.3, 1.0}) {
      const double rate = 1.0 - beta * (1.0 - mdp.gamma());
      for (std::size_t r = 0; r < rhos.size(); ++r) {
        const IterTrace trace = run_cpi(mdp, tau, beta, init, iters, oracle, rhos[r]);
        const double ratio = (rhos[r].probs().array() / mu.probs().array()).maxCoeff();
        const double v_rho = oracle.v_star.dot(rhos[r].probs());
        const double g0_mu = oracle.v_star.dot(mu.probs()) - *trace.records[0].value_at_mu;
        for (int t = 0; t <= iters; ++t) {
          const double gap = v_rho - trace.records[static_cast<std::size_t>(t)].value_at_rho;
          std::ostringstream at;
          at << "mdp" << i << " beta=" << beta << " rho=" << r << " t=" << t;
          tally.bound(gap, ratio * std::pow(rate, t) * g0_mu, 1e-8, -std::numeric_limits<double>::infinity(),
                      at.str());
          if (t > 0) {
            const double prev = v_rho - trace.records[static_cast<std::size_t>(t) - 1].value_at_rho;
            tally.bound(gap, prev, 1e-10, -std::numeric_limits<double>::infinity(), at.str() + " monotone");
          }
        }
        if (beta == 1.0) {
          const IterTrace spi = run_npg(
              mdp, NpgConfig::create(mdp.gamma(), tau, spi_step_size(mdp.gamma(), tau), iters, init), oracle, rhos[r]);
          for (int t = 0; t <= iters; ++t)
            tally.close(trace.records[static_cast<std::size_t>(t)].value_at_rho,
                        spi.records[static_cast<std::size_t>(t)].value_at_rho, 1e-10,
                        "mdp" + std::to_string(i) + " beta=1 vs SPI t=" + std::to_string(t));
        }
      }
    }
  }
  return tally.finish(10, "CPI-style value bound");
}

CriterionResult adaptive(const VerifyOptions& options) {
  Tally tally;
  const double epsilon = 0.05;
  long updates = 0;
  for (int i = 0; i < 10; ++i) {
    const TabularMdp mdp = random_mdp(4, 3, 0.9, mix(options.seed, 1100 + i));
    const HardOptimum reference = solve_hard_optimum(mdp);
    AdaptiveConfig config;
    config.epsilon = epsilon;
    const AdaptiveResult result = run_adaptive_tau(mdp, config, reference);
    const std::string at = "mdp" + std::to_string(i);
    tally.bound(result.q_gap, epsilon, 0.0, 0.0, at + " final Q gap");
    const double log_a = std::log(static_cast<double>(mdp.n_actions()));
    const double max_rounds = std::ceil(std::log2(3.0 * log_a / ((1.0 - mdp.gamma()) * epsilon))) + 1.0;
    tally.bound(static_cast<double>(result.rounds.size()), max_rounds, 0.0, 0.0, at + " round count");
    const double t_last = result.rounds.empty() ? 0.0 : static_cast<double>(result.rounds.back().planned_iters);
    tally.bound(static_cast<double>(result.total_planned), 2.0 * t_last + static_cast<double>(result.rounds.size()),
                0.0, 0.0, at + " total iterations");
    for (const AdaptiveRound& round : result.rounds)
      tally.bound(round.q_gap, round.guarantee, 1e-9, 0.0, at + " round " + std::to_string(round.index) + " guarantee");
    updates += result.total_updates;
  }
  return tally.finish(11, "adaptive tau driver", "total NPG updates " + std::to_string(updates));
}

CriterionResult sandwich(const VerifyOptions& options) {
  Tally tally;
  const double epsilon = 0.1;
  for (int i = 0; i < 10; ++i) {
    const std::uint64_t seed = mix(options.seed, 1200 + i);
    const TabularMdp mdp = random_mdp(i % 2 == 0 ? 4 : 6, i % 3 == 0 ? 2 : 3, i % 2 == 0 ? 0.8 : 0.9, seed);
    const HardOptimum hard = solve_hard_optimum(mdp);
    const double log_a = std::log(static_cast<double>(mdp.n_actions()));
    const double tau_eps = (1.0 - mdp.gamma()) * epsilon / (4.0 * log_a);
    const std::string label = "mdp" + std::to_string(i);

    for (double tau : {1.0, 0.1, tau_eps}) {
      const SoftOptimum oracle = solve_soft_optimum(mdp, tau);
      const Vector v_pi_tau = evaluate_exact(mdp, oracle.pi_star).v;
      const double slack = tau * log_a / (1.0 - mdp.gamma());
      for (int s = 0; s < mdp.n_states(); ++s) {
        const std::string at = label + " tau=" + sci(tau) + " s=" + std::to_string(s);
        tally.bound(v_pi_tau[s], hard.v_star[s], 1e-9, -std::numeric_limits<double>::infinity(), at + " lower");
        tally.bound(hard.v_star[s], v_pi_tau[s] + slack, 1e-9, -std::numeric_limits<double>::infinity(),
                    at + " upper");
      }
    }

    const SoftOptimum oracle = solve_soft_optimum(mdp, tau_eps);
    for (double frac : {1.0, 0.5}) {
      const double eta = frac * spi_step_size(mdp.gamma(), tau_eps);
      Policy policy = Policy::uniform(mdp.n_states(), mdp.n_actions());
      SoftEval eval = evaluate_soft(mdp, policy, tau_eps);
      int t = 0;
      const int cap = 200000;
      while (inf_norm(Vector(oracle.v_star - eval.v)) > epsilon / 2.0 && t < cap) {
        policy = npg_step(mdp, policy, eval.q, tau_eps, eta);
        eval = evaluate_soft(mdp, policy, tau_eps);
        ++t;
      }
      const std::string at = label + " frac=" + sci(frac);
      tally.require(t < cap, at + ": soft value target not reached");
      const Vector v = evaluate_exact(mdp, policy).v;
      for (int s = 0; s < mdp.n_states(); ++s)
        tally.bound(hard.v_star[s] - v[s], epsilon, 1e-8, -std::numeric_limits<double>::infinity(),
                    at + " s=" + std::to_string(s));
    }
  }
  return tally.finish(12, "sandwich bound and tau recipe");
}

}  // namespace

CriterionResult run_criterion(int id, const VerifyOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  CriterionResult result;
  try {
    switch (id) {
      case 1: result = theorem1(options); break;
      case 2: result = spi_contraction(options); break;
      case 3: result = bandit(options); break;
      case 4: result = theorem2(options); break;
      case 5: result = quadratic(options); break;
      case 6: result = bellman_operator(options); break;
      case 7: result = improvement_identity(options); break;
      case 8: result = xi_and_gap(options); break;
      case 9: result = gradient_checks(options); break;
      case 10: result = cpi(options); break;
      case 11: result = adaptive(options); break;
      case 12: result = sandwich(options); break;
      default: throw InvalidConfig("unknown criterion " + std::to_string(id));
    }
  } catch (const InvalidConfig&) {
    throw;
  } catch (const std::exception& e) {
    result = CriterionResult{};
    result.id = id;
    result.name = "criterion " + std::to_string(id);
    result.passed = false;
    result.detail = std::string("aborted: ") + e.what();
  }
  result.seconds = seconds_since(start);
  spdlog::info("criterion {} ({}) {} in {:.2f}s", id, result.name, result.passed ? "passed" : "FAILED",
               result.seconds);
  return result;
}

std::vector<CriterionResult> run_verification(const VerifyOptions& options) {
  std::vector<CriterionResult> results(kCriterionCount);
#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < kCriterionCount; ++i) results[static_cast<std::size_t>(i)] = run_criterion(i + 1, options);
  std::sort(results.begin(), results.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return results;
}

std::string format_report(const std::vector<CriterionResult>& results) {
  std::ostringstream os;
  int passed = 0;
  for (const CriterionResult& r : results) {
    char head[160];
    std::snprintf(head, sizeof(head), "criterion %2d  %s  %-36s checks=%ld floored=%ld worst_excess=%.3e", r.id,
                  r.passed ? "PASS" : "FAIL", r.name.c_str(), r.checks, r.floored, r.worst_excess);
    os << head;
    if (!r.detail.empty()) os << "  [" << r.detail << "]";
    os << '\n';
    if (r.passed) ++passed;
  }
  os << passed << "/" << results.size() << " criteria passed\n";
  return os.str();
}

}  // namespace softnpg
