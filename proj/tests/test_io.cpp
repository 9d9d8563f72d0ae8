#include "doctest.h"
#include "oracles.hpp"

#include "softnpg/experiment.hpp"
#include "softnpg/mdp_io.hpp"
#include "softnpg/optimizers.hpp"
#include "softnpg/soft_bellman.hpp"
#include "softnpg/trace_io.hpp"

#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace softnpg;
using nlohmann::json;

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("softnpg_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

json tiny_mdp() {
  return json::parse(R"({"n_states": 2, "n_actions": 1, "gamma": 0.9,
                         "reward": [[0.5], [1.0]],
                         "transition": [[[0.5, 0.5]], [[0.25, 0.75]]]})");
}

}  // namespace

TEST_CASE("MDP files round-trip bit for bit") {
  const TabularMdp mdp = random_mdp(5, 3, 0.93, 77);
  const std::string text = mdp_to_json(mdp);
  const TabularMdp back = parse_mdp(text);
  CHECK(back.transition() == mdp.transition());
  CHECK(back.reward() == mdp.reward());
  CHECK(back.gamma() == mdp.gamma());
  CHECK(mdp_to_json(back) == text);

  const auto dir = scratch_dir("roundtrip");
  save_mdp(mdp, dir / "m.json");
  CHECK(load_mdp(dir / "m.json").transition() == mdp.transition());
}

TEST_CASE("MDP parsing validates fields") {
  json doc = tiny_mdp();
  CHECK_NOTHROW(parse_mdp(doc.dump()));

  doc["transition"][0][0] = {0.75, 0.75};
  try {
    parse_mdp(doc.dump());
    FAIL("expected rejection");
  } catch (const MdpFormatError& e) {
    CHECK(std::string(e.what()).find("transition[0][0]") != std::string::npos);
  }

  doc = tiny_mdp();
  doc["reward"][1][0] = 1.2;
  try {
    parse_mdp(doc.dump());
    FAIL("expected rejection");
  } catch (const MdpFormatError& e) {
    CHECK(std::string(e.what()).find("reward[1][0]") != std::string::npos);
  }

  doc = tiny_mdp();
  doc.erase("gamma");
  CHECK_THROWS_AS(parse_mdp(doc.dump()), MdpFormatError);
  CHECK_THROWS_AS(parse_mdp("{not json"), MdpFormatError);
  doc = tiny_mdp();
  doc["reward"] = {{0.5}};
  CHECK_THROWS_AS(parse_mdp(doc.dump()), MdpFormatError);
}

TEST_CASE("near-stochastic rows are renormalized") {
  json doc = tiny_mdp();
  doc["transition"][1][0] = {0.25, 0.75 + 5e-10};
  const TabularMdp mdp = parse_mdp(doc.dump());
  CHECK(mdp.p(1, 0, 0) + mdp.p(1, 0, 1) == doctest::Approx(1.0).epsilon(1e-16));
  doc["transition"][1][0] = {0.25, 0.75 + 5e-9};
  CHECK_THROWS_AS(parse_mdp(doc.dump()), MdpFormatError);
}

TEST_CASE("number formatting is shortest round-trip") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
  for (double x : {1.0 / 3.0, 2.5e-17, 123456.789, -0.0072}) CHECK(std::stod(format_double(x)) == x);
}

TEST_CASE("trace CSV") {
  const std::string header = "iter,q_gap,logpi_gap,v_gap,value_at_rho,xi_gap,bound_q,bound_logpi,pass\n";
  SUBCASE("empty trace has only the header") {
    IterTrace trace;
    trace.kind = "npg";
    CHECK(trace_csv(trace, theorem_bounds(trace)) == header);
  }
  SUBCASE("soft policy iteration rows carry the linear bound") {
    const TabularMdp mdp = random_mdp(4, 3, 0.9, 5);
    const SoftOptimum opt = solve_soft_optimum(mdp, 0.5);
    const double eta = spi_step_size(0.9, 0.5);
    IterTrace trace =
        run_npg(mdp, NpgConfig::create(0.9, 0.5, eta, 10, Policy::uniform(4, 3)), opt, Distribution::uniform(4));
    trace.kind = "spi";
    const std::vector<BoundRow> bounds = theorem_bounds(trace);
    REQUIRE(bounds.size() == 11);
    CHECK_FALSE(bounds[0].bound_q.has_value());
    for (std::size_t t = 1; t < bounds.size(); ++t) {
      REQUIRE(bounds[t].bound_q.has_value());
      // (1 - eta tau) = gamma here, so the bound is gamma^t C1.
      CHECK(*bounds[t].bound_q == doctest::Approx(std::pow(0.9, static_cast<double>(t)) * trace.c1).epsilon(1e-12));
      CHECK(*bounds[t].pass);
    }
    const std::string csv = trace_csv(trace, bounds);
    CHECK(csv.rfind(header, 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 12);

    const auto dir = scratch_dir("trace");
    emit_trace(trace, bounds, dir / "a", "spi", json{{"kind", "spi"}});
    emit_trace(trace, bounds, dir / "b", "spi", json{{"kind", "spi"}});
    CHECK(read_file(dir / "a" / "spi.csv") == read_file(dir / "b" / "spi.csv"));
    CHECK(read_file(dir / "a" / "spi.json") == read_file(dir / "b" / "spi.json"));
    const json summary = json::parse(read_file(dir / "a" / "spi.json"));
    CHECK(summary.at("c1").get<double>() == trace.c1);
    CHECK(summary.contains("oracle_residual"));
  }
}

TEST_CASE("experiment configuration") {
  SUBCASE("missing tau for soft policy iteration") {
    try {
      parse_config(json{{"kind", "spi"}, {"mdp", {{"random", {{"states", 3}, {"actions", 2}}}}}});
      FAIL("expected rejection");
    } catch (const InvalidConfig& e) {
      CHECK(std::string(e.what()).find("tau") != std::string::npos);
    }
  }
  SUBCASE("unknown keys are rejected") {
    CHECK_THROWS_AS(parse_config(json{{"kind", "bandit"}, {"tua", 1.0}}), InvalidConfig);
    CHECK_THROWS_AS(parse_kind("nope"), InvalidConfig);
  }
  SUBCASE("configuration survives serialization") {
    const ExperimentConfig config = parse_config(json{{"kind", "npg"},
                                                      {"mdp", {{"random", {{"states", 3}, {"actions", 2}}}}},
                                                      {"tau", 0.5},
                                                      {"eta_fraction", 0.5},
                                                      {"seed", 9}});
    const ExperimentConfig again = parse_config(config.to_json());
    CHECK(again.to_json() == config.to_json());
  }
  SUBCASE("npg run writes a reproducible trace") {
    const auto dir = scratch_dir("experiment");
    json doc{{"kind", "npg"},
             {"mdp", {{"random", {{"states", 3}, {"actions", 2}}}}},
             {"tau", 0.5},
             {"eta_fraction", 0.5},
             {"max_iters", 20},
             {"out", (dir / "one").string()}};
    const ExperimentOutcome first = run_experiment(parse_config(doc));
    doc["out"] = (dir / "two").string();
    run_experiment(parse_config(doc));
    CHECK(first.exit_code == 0);
    CHECK(read_file(dir / "one" / "npg.csv") == read_file(dir / "two" / "npg.csv"));
    CHECK(read_file(dir / "one" / "npg.json") != "");
  }
}
