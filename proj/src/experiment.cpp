#include "softnpg/experiment.hpp"

#include "softnpg/mdp_io.hpp"
#include "softnpg/optimizers.hpp"
#include "softnpg/trace_io.hpp"
#include "softnpg/verify.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <set>
#include <sstream>

namespace softnpg {

namespace {

using nlohmann::json;

const std::set<std::string> kKnownKeys = {"kind",    "mdp",        "gamma",      "states",  "actions", "tau",
                                          "eta",     "eta_fraction", "beta",     "delta",   "epsilon", "max_iters",
                                          "warm_start", "noise_mode", "rewards", "rho",     "out",     "oracle_tol",
                                          "seed",    "quick"};

[[noreturn]] void bad(const std::string& field, const std::string& message) {
  throw InvalidConfig("config field '" + field + "': " + message);
}

double get_double(const json& doc, const std::string& key) {
  const json& v = doc.at(key);
  if (!v.is_number()) bad(key, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) bad(key, "must be finite");
  return x;
}

std::optional<double> opt_double(const json& doc, const std::string& key) {
  if (!doc.contains(key) || doc.at(key).is_null()) return std::nullopt;
  return get_double(doc, key);
}

long long get_int(const json& doc, const std::string& key, long long min_value) {
  const json& v = doc.at(key);
  if (!v.is_number_integer()) bad(key, "expected an integer");
  const long long x = v.get<long long>();
  if (x < min_value) bad(key, "must be >= " + std::to_string(min_value));
  return x;
}

std::uint64_t get_u64(const json& doc, const std::string& key) {
  const json& v = doc.at(key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<long long>() >= 0) return static_cast<std::uint64_t>(v.get<long long>());
  bad(key, "expected a nonnegative integer");
}

void require(const std::optional<double>& value, const std::string& field, ExperimentKind kind) {
  if (!value) bad(field, "required for kind '" + to_string(kind) + "'");
}

void validate(const ExperimentConfig& c) {
  if (c.tau && !(*c.tau > 0.0)) bad("tau", "must be positive");
  if (c.eta && !(*c.eta > 0.0)) bad("eta", "must be positive");
  if (c.eta_fraction && !(*c.eta_fraction > 0.0 && *c.eta_fraction <= 1.0)) bad("eta_fraction", "must lie in (0,1]");
  if (c.eta && c.eta_fraction) bad("eta", "give either eta or eta_fraction, not both");
  if (c.beta && !(*c.beta > 0.0 && *c.beta <= 1.0)) bad("beta", "must lie in (0,1]");
  if (c.delta && !(*c.delta >= 0.0)) bad("delta", "must be nonnegative");
  if (c.epsilon && !(*c.epsilon > 0.0)) bad("epsilon", "must be positive");
  if (!(c.oracle_tol > 0.0)) bad("oracle_tol", "must be positive");
  if (!(c.random.gamma >= 0.0 && c.random.gamma < 1.0)) bad("gamma", "must lie in [0,1)");
  if (c.mdp_file && !std::filesystem::exists(*c.mdp_file)) bad("mdp.file", "file does not exist: " + c.mdp_file->string());

  switch (c.kind) {
    case ExperimentKind::kBandit:
      require(c.tau, "tau", c.kind);
      if (c.bandit_rewards.empty()) bad("rewards", "need at least one arm");
      break;
    case ExperimentKind::kNpg:
    case ExperimentKind::kInexact:
      require(c.tau, "tau", c.kind);
      if (!c.eta && !c.eta_fraction) bad("eta", "eta or eta_fraction required for kind '" + to_string(c.kind) + "'");
      if (c.kind == ExperimentKind::kInexact) require(c.delta, "delta", c.kind);
      break;
    case ExperimentKind::kSpi:
    case ExperimentKind::kQuadratic:
      require(c.tau, "tau", c.kind);
      if (c.eta || c.eta_fraction) bad("eta", "kind '" + to_string(c.kind) + "' fixes eta = (1-gamma)/tau");
      break;
    case ExperimentKind::kCpi:
      require(c.tau, "tau", c.kind);
      require(c.beta, "beta", c.kind);
      break;
    case ExperimentKind::kAdaptive:
      require(c.epsilon, "epsilon", c.kind);
      if (c.eta) bad("eta", "kind 'adaptive' takes eta_fraction, a multiple of (1-gamma)/tau0");
      break;
    case ExperimentKind::kVerifyAll:
      break;
  }
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string describe_final(const IterTrace& trace) {
  std::ostringstream os;
  os << trace.kind << ": " << (trace.records.empty() ? 0 : trace.records.size() - 1) << " iterations";
  if (!trace.records.empty()) {
    const IterRecord& last = trace.records.back();
    os << ", final q_gap=" << format_double(last.q_gap) << " logpi_gap=" << format_double(last.logpi_gap)
       << " v_gap=" << format_double(last.v_gap);
  }
  return os.str();
}

ExperimentOutcome emit(const ExperimentConfig& config, const IterTrace& trace) {
  const std::vector<BoundRow> bounds = theorem_bounds(trace);
  const std::string stem = to_string(config.kind);
  emit_trace(trace, bounds, config.out_dir, stem, config.to_json());
  ExperimentOutcome outcome;
  outcome.summary = describe_final(trace);
  long violations = 0;
  for (const BoundRow& row : bounds)
    if (row.pass && !*row.pass) ++violations;
  if (violations > 0) outcome.summary += ", " + std::to_string(violations) + " rows above the bound";
  outcome.files = {config.out_dir / (stem + ".csv"), config.out_dir / (stem + ".json")};
  return outcome;
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kBandit: return "bandit";
    case ExperimentKind::kNpg: return "npg";
    case ExperimentKind::kSpi: return "spi";
    case ExperimentKind::kCpi: return "cpi";
    case ExperimentKind::kInexact: return "inexact";
    case ExperimentKind::kQuadratic: return "quadratic";
    case ExperimentKind::kAdaptive: return "adaptive";
    case ExperimentKind::kVerifyAll: return "verify-all";
  }
  return "unknown";
}

ExperimentKind parse_kind(const std::string& name) {
  for (ExperimentKind k : {ExperimentKind::kBandit, ExperimentKind::kNpg, ExperimentKind::kSpi, ExperimentKind::kCpi,
                           ExperimentKind::kInexact, ExperimentKind::kQuadratic, ExperimentKind::kAdaptive,
                           ExperimentKind::kVerifyAll})
    if (to_string(k) == name) return k;
  bad("kind", "unknown experiment kind '" + name + "'");
}

Distribution RhoSpec::resolve(int n_states) const {
  switch (kind) {
    case Kind::kUniform: return Distribution::uniform(n_states);
    case Kind::kPoint:
      if (state < 0 || state >= n_states) bad("rho", "point state out of range");
      return Distribution::point(n_states, state);
    case Kind::kExplicit: {
      if (static_cast<int>(weights.size()) != n_states) bad("rho", "length does not match the number of states");
      try {
        return Distribution(Eigen::Map<const Vector>(weights.data(), n_states));
      } catch (const InvalidInput& e) {
        bad("rho", e.what());
      }
    }
  }
  return Distribution::uniform(n_states);
}

double ExperimentConfig::resolve_eta(double gamma) const {
  if (eta) return *eta;
  const double step = spi_step_size(gamma, tau.value_or(1.0));
  return eta_fraction ? *eta_fraction * step : step;
}

json ExperimentConfig::to_json() const {
  json j;
  j["kind"] = to_string(kind);
  if (mdp_file)
    j["mdp"] = {{"file", mdp_file->string()}};
  else
    j["mdp"] = {{"random", {{"states", random.states}, {"actions", random.actions}, {"gamma", random.gamma},
                            {"seed", random.seed}}}};
  j["tau"] = optional_json(tau);
  j["eta"] = optional_json(eta);
  j["eta_fraction"] = optional_json(eta_fraction);
  j["beta"] = optional_json(beta);
  j["delta"] = optional_json(delta);
  j["epsilon"] = optional_json(epsilon);
  j["max_iters"] = max_iters;
  j["warm_start"] = warm_start;
  j["noise_mode"] = noise_mode == NoiseMode::kUniform ? "uniform" : "adversarial";
  j["rewards"] = bandit_rewards;
  switch (rho.kind) {
    case RhoSpec::Kind::kUniform: j["rho"] = "uniform"; break;
    case RhoSpec::Kind::kPoint: j["rho"] = {{"point", rho.state}}; break;
    case RhoSpec::Kind::kExplicit: j["rho"] = rho.weights; break;
  }
  j["out"] = out_dir.string();
  j["oracle_tol"] = oracle_tol;
  j["seed"] = seed;
  j["quick"] = quick;
  return j;
}

ExperimentConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw InvalidConfig("config must be a JSON object");
  for (const auto& [key, value] : doc.items())
    if (!kKnownKeys.count(key)) bad(key, "unknown field");

  ExperimentConfig c;
  if (!doc.contains("kind")) bad("kind", "missing");
  if (!doc.at("kind").is_string()) bad("kind", "expected a string");
  c.kind = parse_kind(doc.at("kind").get<std::string>());

  if (doc.contains("seed")) c.seed = get_u64(doc, "seed");
  c.random.seed = c.seed;
  if (doc.contains("mdp")) {
    const json& m = doc.at("mdp");
    if (!m.is_object()) bad("mdp", "expected an object with 'file' or 'random'");
    if (m.contains("file")) {
      if (!m.at("file").is_string()) bad("mdp.file", "expected a path string");
      std::filesystem::path p = m.at("file").get<std::string>();
      if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
      c.mdp_file = p;
    } else if (m.contains("random")) {
      const json& r = m.at("random");
      if (!r.is_object()) bad("mdp.random", "expected an object");
      if (r.contains("states")) c.random.states = static_cast<int>(get_int(r, "states", 1));
      if (r.contains("actions")) c.random.actions = static_cast<int>(get_int(r, "actions", 1));
      if (r.contains("gamma")) c.random.gamma = get_double(r, "gamma");
      if (r.contains("seed")) c.random.seed = get_u64(r, "seed");
    } else {
      bad("mdp", "expected 'file' or 'random'");
    }
  }
  if (doc.contains("states")) c.random.states = static_cast<int>(get_int(doc, "states", 1));
  if (doc.contains("actions")) c.random.actions = static_cast<int>(get_int(doc, "actions", 1));
  if (doc.contains("gamma")) c.random.gamma = get_double(doc, "gamma");

  c.tau = opt_double(doc, "tau");
  c.eta = opt_double(doc, "eta");
  c.eta_fraction = opt_double(doc, "eta_fraction");
  c.beta = opt_double(doc, "beta");
  c.delta = opt_double(doc, "delta");
  c.epsilon = opt_double(doc, "epsilon");
  if (doc.contains("max_iters")) c.max_iters = static_cast<int>(get_int(doc, "max_iters", 0));
  if (doc.contains("warm_start")) c.warm_start = static_cast<int>(get_int(doc, "warm_start", 0));
  if (doc.contains("oracle_tol")) c.oracle_tol = get_double(doc, "oracle_tol");
  if (doc.contains("quick")) {
    if (!doc.at("quick").is_boolean()) bad("quick", "expected a boolean");
    c.quick = doc.at("quick").get<bool>();
  }
  if (doc.contains("noise_mode")) {
    const json& v = doc.at("noise_mode");
    if (v == "uniform")
      c.noise_mode = NoiseMode::kUniform;
    else if (v == "adversarial")
      c.noise_mode = NoiseMode::kAdversarial;
    else
      bad("noise_mode", "expected 'uniform' or 'adversarial'");
  }
  if (doc.contains("rewards")) {
    const json& v = doc.at("rewards");
    if (!v.is_array()) bad("rewards", "expected an array of numbers");
    c.bandit_rewards.clear();
    for (const json& x : v) {
      if (!x.is_number()) bad("rewards", "expected an array of numbers");
      c.bandit_rewards.push_back(x.get<double>());
    }
  }
  if (doc.contains("rho")) {
    const json& v = doc.at("rho");
    if (v == "uniform") {
      c.rho.kind = RhoSpec::Kind::kUniform;
    } else if (v.is_object() && v.contains("point") && v.at("point").is_number_integer()) {
      c.rho.kind = RhoSpec::Kind::kPoint;
      c.rho.state = v.at("point").get<int>();
    } else if (v.is_array()) {
      c.rho.kind = RhoSpec::Kind::kExplicit;
      for (const json& x : v) {
        if (!x.is_number()) bad("rho", "expected an array of numbers");
        c.rho.weights.push_back(x.get<double>());
      }
    } else {
      bad("rho", "expected \"uniform\", {\"point\": s} or an array of weights");
    }
  }
  if (doc.contains("out")) {
    if (!doc.at("out").is_string()) bad("out", "expected a directory path");
    c.out_dir = doc.at("out").get<std::string>();
  }
  validate(c);
  return c;
}

TabularMdp resolve_mdp(const ExperimentConfig& config) {
  if (config.mdp_file) return load_mdp(*config.mdp_file);
  return random_mdp(config.random.states, config.random.actions, config.random.gamma, config.random.seed);
}

ExperimentOutcome run_experiment(const ExperimentConfig& config) {
  spdlog::info("running {} experiment", to_string(config.kind));
  if (config.kind == ExperimentKind::kVerifyAll) {
    VerifyOptions options;
    options.seed = config.seed;
    options.quick = config.quick;
    const std::vector<CriterionResult> results = run_verification(options);
    ExperimentOutcome outcome;
    outcome.summary = format_report(results);
    for (const CriterionResult& r : results)
      if (!r.passed) outcome.exit_code = 1;
    std::filesystem::create_directories(config.out_dir);
    write_text_file(config.out_dir / "verify_report.txt", outcome.summary);
    outcome.files = {config.out_dir / "verify_report.txt"};
    return outcome;
  }

  if (config.kind == ExperimentKind::kBandit) {
    const Vector rewards = Eigen::Map<const Vector>(config.bandit_rewards.data(),
                                                    static_cast<Eigen::Index>(config.bandit_rewards.size()));
    const double eta = config.resolve_eta(0.0);
    const Vector init = Vector::Constant(rewards.size(), -std::log(static_cast<double>(rewards.size())));
    return emit(config, run_bandit(rewards, *config.tau, eta, init, config.max_iters));
  }

  const TabularMdp mdp = resolve_mdp(config);
  const Distribution rho = config.rho.resolve(mdp.n_states());
  const Policy uniform = Policy::uniform(mdp.n_states(), mdp.n_actions());

  if (config.kind == ExperimentKind::kAdaptive) {
    AdaptiveConfig adaptive;
    adaptive.epsilon = *config.epsilon;
    adaptive.init_tau = config.tau.value_or(1.0);
    adaptive.eta_scale = config.eta_fraction.value_or(1.0);
    const HardOptimum reference = solve_hard_optimum(mdp, config.oracle_tol);
    const AdaptiveResult result = run_adaptive_tau(mdp, adaptive, reference);
    std::string csv = "round,tau,eta,planned_iters,updates,guarantee,q_gap\n";
    for (const AdaptiveRound& r : result.rounds)
      csv += std::to_string(r.index) + "," + format_double(r.tau) + "," + format_double(r.eta) + "," +
             std::to_string(r.planned_iters) + "," + std::to_string(r.updates) + "," + format_double(r.guarantee) +
             "," + format_double(r.q_gap) + "\n";
    json summary;
    summary["config"] = config.to_json();
    summary["gamma"] = mdp.gamma();
    summary["rounds"] = result.rounds.size();
    summary["total_planned"] = result.total_planned;
    summary["total_updates"] = result.total_updates;
    summary["q_gap"] = result.q_gap;
    summary["hard_oracle_residual"] = reference.residual;
    std::filesystem::create_directories(config.out_dir);
    write_text_file(config.out_dir / "adaptive.csv", csv);
    write_text_file(config.out_dir / "adaptive.json", summary.dump(2) + "\n");
    ExperimentOutcome outcome;
    outcome.summary = "adaptive: " + std::to_string(result.rounds.size()) + " rounds, " +
                      std::to_string(result.total_updates) + " updates, final Q gap " + format_double(result.q_gap);
    outcome.files = {config.out_dir / "adaptive.csv", config.out_dir / "adaptive.json"};
    return outcome;
  }

  const double tau = *config.tau;
  const SoftOptimum oracle = solve_soft_optimum(mdp, tau, config.oracle_tol);
  spdlog::debug("oracle residual {} after {} sweeps", oracle.residual, oracle.sweeps);

  switch (config.kind) {
    case ExperimentKind::kNpg:
    case ExperimentKind::kSpi:
    case ExperimentKind::kInexact: {
      std::optional<NoiseConfig> noise;
      if (config.kind == ExperimentKind::kInexact) noise = NoiseConfig{*config.delta, config.seed, config.noise_mode};
      const double eta = config.kind == ExperimentKind::kSpi ? spi_step_size(mdp.gamma(), tau)
                                                             : config.resolve_eta(mdp.gamma());
      const NpgConfig npg = NpgConfig::create(mdp.gamma(), tau, eta, config.max_iters, uniform, noise, true);
      return emit(config, run_npg(mdp, npg, oracle, rho));
    }
    case ExperimentKind::kCpi:
      return emit(config, run_cpi(mdp, tau, *config.beta, uniform, config.max_iters, oracle, rho));
    case ExperimentKind::kQuadratic: {
      const Policy start = spi_warm_start(mdp, tau, config.warm_start, uniform);
      return emit(config, quadratic_regime_trace(mdp, tau, start, config.max_iters, oracle, rho));
    }
    default:
      break;
  }
  throw InvalidConfig("unsupported experiment kind");
}

}  // namespace softnpg
