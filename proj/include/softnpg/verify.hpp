#pragma once

// Acceptance suites for the convergence guarantees, shared by the `verify`
// subcommand and the acceptance test binary.

#include <cstdint>
#include <string>
#include <vector>

namespace softnpg {

struct VerifyOptions {
  std::uint64_t seed = 7;
  /// 5 MDPs of size (4,3) and 300 iterations instead of the 25-MDP ensemble.
  bool quick = false;
};

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  long checks = 0;
  long floored = 0;  ///< comparisons skipped because the metric sat below the floor
  long failures = 0;
  /// max(metric - bound) over the checked comparisons; negative means slack.
  double worst_excess = 0.0;
  double seconds = 0.0;
  std::string detail;  ///< first failure, or a note on the suite
};

inline constexpr int kCriterionCount = 12;

CriterionResult run_criterion(int id, const VerifyOptions& options);

/// All criteria, possibly in parallel; the result is sorted by id.
std::vector<CriterionResult> run_verification(const VerifyOptions& options);

/// One line per criterion. Timing is excluded so reports are reproducible.
std::string format_report(const std::vector<CriterionResult>& results);

}  // namespace softnpg
