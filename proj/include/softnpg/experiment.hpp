#pragma once

// Experiment configuration (JSON, with command-line overrides merged in as
// JSON keys) and the driver behind `run`.

#include "softnpg/mdp.hpp"
#include "softnpg/policy_eval.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace softnpg {

enum class ExperimentKind { kBandit, kNpg, kSpi, kCpi, kInexact, kQuadratic, kAdaptive, kVerifyAll };

std::string to_string(ExperimentKind kind);
ExperimentKind parse_kind(const std::string& name);

struct RandomMdpSpec {
  int states = 4;
  int actions = 3;
  double gamma = 0.9;
  std::uint64_t seed = 0;
};

struct RhoSpec {
  enum class Kind { kUniform, kPoint, kExplicit };
  Kind kind = Kind::kUniform;
  int state = 0;
  std::vector<double> weights;

  Distribution resolve(int n_states) const;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kNpg;
  std::optional<std::filesystem::path> mdp_file;
  RandomMdpSpec random;
  std::optional<double> tau;
  std::optional<double> eta;
  std::optional<double> eta_fraction;
  std::optional<double> beta;
  std::optional<double> delta;
  std::optional<double> epsilon;
  int max_iters = 200;
  int warm_start = 200;  ///< SPI iterations before a quadratic-regime trace
  NoiseMode noise_mode = NoiseMode::kUniform;
  std::vector<double> bandit_rewards = {1.0, 0.9, 0.1};
  RhoSpec rho;
  std::filesystem::path out_dir = "out";
  double oracle_tol = 1e-12;
  std::uint64_t seed = 0;
  bool quick = false;

  nlohmann::json to_json() const;
  /// eta from `eta`, or eta_fraction * (1-gamma)/tau, or the SPI step.
  double resolve_eta(double gamma) const;
};

/// Field-level validation; throws InvalidConfig naming the field. Relative
/// MDP paths are resolved against `base_dir`.
ExperimentConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});

TabularMdp resolve_mdp(const ExperimentConfig& config);

struct ExperimentOutcome {
  int exit_code = 0;
  std::string summary;
  std::vector<std::filesystem::path> files;
};

ExperimentOutcome run_experiment(const ExperimentConfig& config);

}  // namespace softnpg
