// softnpg: solve, run, bandit, verify and gen-mdp subcommands.

#include "softnpg/experiment.hpp"
#include "softnpg/mdp_io.hpp"
#include "softnpg/optimizers.hpp"
#include "softnpg/trace_io.hpp"
#include "softnpg/verify.hpp"

#include "CLI11.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

using nlohmann::json;
using namespace softnpg;

constexpr int kExitViolation = 1;
constexpr int kExitConfig = 2;

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("softnpg");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* env = std::getenv("SOFTNPG_LOG");
  const std::string level = env ? env : "off";
  if (level == "off" || level.empty())
    spdlog::set_level(spdlog::level::off);
  else if (level == "info")
    spdlog::set_level(spdlog::level::info);
  else if (level == "debug")
    spdlog::set_level(spdlog::level::debug);
  else
    throw InvalidConfig("SOFTNPG_LOG must be off, info or debug (got '" + level + "')");
}

// Flags shared by solve and run; unset values leave the config untouched.
struct Overrides {
  std::string config_path;
  std::string mdp_path;
  std::string kind;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> tau, eta, eta_fraction, beta, delta, epsilon, gamma;
  std::optional<int> iters, states, actions;
  bool quick = false;

  void attach(CLI::App* app, bool with_algorithm) {
    app->add_option("--config", config_path, "JSON experiment config")->check(CLI::ExistingFile);
    app->add_option("--mdp", mdp_path, "MDP file (JSON)")->check(CLI::ExistingFile);
    app->add_option("--seed", seed, "seed for random MDPs and noise");
    app->add_option("--out", out, "output directory");
    app->add_option("--gamma", gamma, "discount factor of a random MDP");
    app->add_option("--states", states, "states of a random MDP");
    app->add_option("--actions", actions, "actions of a random MDP");
    app->add_option("--tau", tau, "entropy regularization weight");
    if (!with_algorithm) return;
    app->add_option("--kind", kind, "bandit|npg|spi|cpi|inexact|quadratic|adaptive|verify-all");
    app->add_option("--eta", eta, "step size");
    app->add_option("--eta-fraction", eta_fraction, "step size as a fraction of (1-gamma)/tau");
    app->add_option("--beta", beta, "CPI mixing weight");
    app->add_option("--delta", delta, "evaluation error bound");
    app->add_option("--epsilon", epsilon, "target accuracy");
    app->add_option("--iters", iters, "iteration count");
    app->add_flag("--quick", quick, "reduced verification ensemble");
  }

  json merged(const std::string& default_kind) const {
    json doc = json::object();
    std::filesystem::path base;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      try {
        doc = json::parse(in);
      } catch (const json::parse_error& e) {
        throw InvalidConfig(config_path + ": malformed JSON: " + e.what());
      }
      if (!doc.is_object()) throw InvalidConfig(config_path + ": config must be a JSON object");
      base = std::filesystem::path(config_path).parent_path();
      if (doc.contains("mdp") && doc["mdp"].is_object() && doc["mdp"].contains("file") &&
          doc["mdp"]["file"].is_string()) {
        std::filesystem::path p = doc["mdp"]["file"].get<std::string>();
        if (p.is_relative()) doc["mdp"]["file"] = (base / p).string();
      }
    }
    if (!kind.empty()) doc["kind"] = kind;
    if (!doc.contains("kind")) doc["kind"] = default_kind;
    if (!mdp_path.empty()) doc["mdp"] = {{"file", mdp_path}};
    if (!out.empty()) doc["out"] = out;
    if (seed) doc["seed"] = *seed;
    auto set = [&](const char* key, const auto& v) {
      if (v) doc[key] = *v;
    };
    set("tau", tau);
    set("eta", eta);
    set("eta_fraction", eta_fraction);
    set("beta", beta);
    set("delta", delta);
    set("epsilon", epsilon);
    set("gamma", gamma);
    set("max_iters", iters);
    set("states", states);
    set("actions", actions);
    if (quick) doc["quick"] = true;
    return doc;
  }
};

std::string format_vector(const Vector& v) {
  std::string s = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_double(v[i]);
  return s + "]";
}

int cmd_solve(const Overrides& o) {
  json doc = o.merged("spi");
  if (!doc.contains("tau")) throw InvalidConfig("config field 'tau': required for solve");
  doc["kind"] = "spi";
  const ExperimentConfig config = parse_config(doc);
  const TabularMdp mdp = resolve_mdp(config);
  const SoftOptimum opt = solve_soft_optimum(mdp, *config.tau, config.oracle_tol);
  std::cout << "states " << mdp.n_states() << ", actions " << mdp.n_actions() << ", gamma "
            << format_double(mdp.gamma()) << ", tau " << format_double(opt.tau) << "\n";
  std::cout << "residual " << format_double(opt.residual) << " after " << opt.sweeps << " sweeps\n";
  std::cout << "V* " << format_vector(opt.v_star) << "\n";
  const Matrix probs = opt.pi_star.probs();
  for (int s = 0; s < mdp.n_states(); ++s)
    std::cout << "pi*(.|" << s << ") " << format_vector(probs.row(s).transpose()) << "\n";
  if (opt.mu_star)
    std::cout << "mu* " << format_vector(opt.mu_star->probs()) << "\n";
  else
    std::cout << "mu* unavailable: " << opt.mu_star_issue << "\n";

  if (!o.out.empty()) {
    json j;
    j["config"] = config.to_json();
    j["tau"] = opt.tau;
    j["gamma"] = mdp.gamma();
    j["residual"] = opt.residual;
    j["sweeps"] = opt.sweeps;
    j["v_star"] = std::vector<double>(opt.v_star.data(), opt.v_star.data() + opt.v_star.size());
    json q = json::array(), pi = json::array();
    for (int s = 0; s < mdp.n_states(); ++s) {
      json qr = json::array(), pr = json::array();
      for (int a = 0; a < mdp.n_actions(); ++a) {
        qr.push_back(opt.q_star(s, a));
        pr.push_back(probs(s, a));
      }
      q.push_back(qr);
      pi.push_back(pr);
    }
    j["q_star"] = q;
    j["pi_star"] = pi;
    if (opt.mu_star)
      j["mu_star"] = std::vector<double>(opt.mu_star->probs().data(),
                                         opt.mu_star->probs().data() + opt.mu_star->size());
    else
      j["mu_star"] = nullptr;
    std::filesystem::create_directories(o.out);
    const std::filesystem::path path = std::filesystem::path(o.out) / "solution.json";
    write_text_file(path, j.dump(2) + "\n");
    std::cout << "wrote " << path.string() << "\n";
  }
  return 0;
}

int cmd_run(const Overrides& o) {
  const ExperimentConfig config = parse_config(o.merged("npg"));
  const ExperimentOutcome outcome = run_experiment(config);
  std::cout << outcome.summary;
  if (outcome.summary.empty() || outcome.summary.back() != '\n') std::cout << "\n";
  for (const auto& f : outcome.files) std::cout << "wrote " << f.string() << "\n";
  return outcome.exit_code;
}

int cmd_bandit(double tau, std::optional<double> eta, int iters, const std::string& out) {
  if (!(tau > 0.0)) throw InvalidConfig("--tau must be positive");
  const double step = eta.value_or(1.0 / tau);
  if (!(step > 0.0) || step * tau > 1.0 + 1e-12) throw InvalidConfig("--eta must satisfy 0 < eta*tau <= 1");
  if (iters < 1) throw InvalidConfig("--iters must be >= 1");
  Vector rewards(3);
  rewards << 1.0, 0.9, 0.1;
  const Vector init = Vector::Constant(3, -std::log(3.0));
  const IterTrace trace = run_bandit(rewards, tau, step, init, iters);
  const std::vector<BoundRow> bounds = theorem_bounds(trace);

  std::printf("bandit rewards (1, 0.9, 0.1), tau=%g, eta=%g, uniform start\n", tau, step);
  std::printf("%5s  %-14s %-14s %s\n", "iter", "logpi_gap", "bound", "value");
  bool ok = true;
  for (std::size_t t = 0; t < trace.records.size(); ++t) {
    const IterRecord& r = trace.records[t];
    std::printf("%5d  %-14.6e %-14.6e %.12f\n", r.iter, r.logpi_gap, *bounds[t].bound_logpi, r.value_at_rho);
    ok = ok && bounds[t].pass.value_or(true);
  }
  if (trace.records[1].logpi_gap <= 1e-10)
    std::printf("converged in a single iteration (log-policy gap %.3e after one step)\n", trace.records[1].logpi_gap);
  else
    std::printf("log-policy gap after %d iterations: %.3e\n", iters, trace.records.back().logpi_gap);
  if (!out.empty()) {
    json config = {{"kind", "bandit"}, {"tau", tau}, {"eta", step}, {"max_iters", iters},
                   {"rewards", {1.0, 0.9, 0.1}}};
    emit_trace(trace, bounds, out, "bandit", config);
    std::printf("wrote %s/bandit.csv and bandit.json\n", out.c_str());
  }
  return ok ? 0 : kExitViolation;
}

int cmd_verify(std::uint64_t seed, bool quick, const std::string& out) {
  VerifyOptions options;
  options.seed = seed;
  options.quick = quick;
  const std::vector<CriterionResult> results = run_verification(options);
  const std::string report = format_report(results);
  std::cout << report;
  if (!out.empty()) {
    std::filesystem::create_directories(out);
    write_text_file(std::filesystem::path(out) / "verify_report.txt", report);
  }
  for (const CriterionResult& r : results)
    if (!r.passed) return kExitViolation;
  return 0;
}

int cmd_gen_mdp(int states, int actions, double gamma, std::uint64_t seed, const std::string& out) {
  if (states < 1 || actions < 1) throw InvalidConfig("--states and --actions must be >= 1");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidConfig("--gamma must lie in [0,1)");
  const TabularMdp mdp = random_mdp(states, actions, gamma, seed);
  if (out.empty() || out == "-") {
    std::cout << mdp_to_json(mdp);
  } else {
    save_mdp(mdp, out);
    std::cout << "wrote " << out << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entropy-regularized natural policy gradient toolkit"};
  app.require_subcommand(1);

  Overrides solve_opts;
  CLI::App* solve = app.add_subcommand("solve", "compute the regularized optimum of an MDP");
  solve_opts.attach(solve, false);

  Overrides run_opts;
  CLI::App* run = app.add_subcommand("run", "run one experiment and write its trace");
  run_opts.attach(run, true);

  double bandit_tau = 1.0;
  std::optional<double> bandit_eta;
  int bandit_iters = 20;
  std::string bandit_out;
  CLI::App* bandit = app.add_subcommand("bandit", "single-state NPG dynamics on rewards (1, 0.9, 0.1)");
  bandit->add_option("--tau", bandit_tau, "entropy regularization weight");
  bandit->add_option("--eta", bandit_eta, "step size (default 1/tau)");
  bandit->add_option("--iters", bandit_iters, "iterations");
  bandit->add_option("--out", bandit_out, "output directory");

  std::uint64_t verify_seed = 7;
  bool verify_quick = false;
  std::string verify_out;
  CLI::App* verify = app.add_subcommand("verify", "run the acceptance suites");
  verify->add_option("--seed", verify_seed, "ensemble seed");
  verify->add_flag("--quick", verify_quick, "5 MDPs of size (4,3), 300 iterations");
  verify->add_option("--out", verify_out, "directory for the report");

  int gen_states = 4, gen_actions = 3;
  double gen_gamma = 0.9;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  CLI::App* gen = app.add_subcommand("gen-mdp", "write a random MDP file");
  gen->add_option("--states", gen_states, "number of states");
  gen->add_option("--actions", gen_actions, "number of actions");
  gen->add_option("--gamma", gen_gamma, "discount factor");
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--out", gen_out, "output file (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    configure_logging();
    if (*solve) return cmd_solve(solve_opts);
    if (*run) return cmd_run(run_opts);
    if (*bandit) return cmd_bandit(bandit_tau, bandit_eta, bandit_iters, bandit_out);
    if (*verify) return cmd_verify(verify_seed, verify_quick, verify_out);
    if (*gen) return cmd_gen_mdp(gen_states, gen_actions, gen_gamma, gen_seed, gen_out);
  } catch (const InvalidConfig& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InvalidInput& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitConfig;
  } catch (const RegimeNotEntered& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return kExitConfig;
}
