#pragma once

// CSV/JSON emission for iteration traces.

#include "softnpg/optimizers.hpp"

#include "json.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace softnpg {

/// Theoretical values attached to one trace row; empty where no bound applies.
struct BoundRow {
  std::optional<double> bound_q;
  std::optional<double> bound_logpi;
  std::optional<bool> pass;
};

/// Metrics below this are treated as converged and always pass.
inline constexpr double kMetricFloor = 1e-12;

/// Per-row bounds derived only from (kind, C1, C2, gamma, eta, tau):
///  - npg/spi/inexact, row t >= 1:
///      bound_q     = gamma ((1 - eta tau)^(t-1) C1 + C2)
///      bound_logpi = 2/tau ((1 - eta tau)^(t-1) C1 + C2)
///    row 0 carries no bound.
///  - bandit, every row: bound_logpi = 2 (1 - eta tau)^t logpi_gap[0].
///  - cpi/quadratic: no per-row columns.
/// pass compares against bound + tolerance (1e-8 (1 + C1) for q, 1e-8 for
/// log pi, 1e-10 for the bandit), or holds when the metric is below the floor.
std::vector<BoundRow> theorem_bounds(const IterTrace& trace);

/// Shortest round-trip decimal form; "nan"/"inf"/"-inf" for non-finite values.
std::string format_double(double value);

std::string trace_csv(const IterTrace& trace, const std::vector<BoundRow>& bounds);
nlohmann::json trace_summary(const IterTrace& trace, const nlohmann::json& config);

/// Writes `<stem>.csv` and `<stem>.json` into `dir`. Throws std::runtime_error
/// naming the path on I/O failure, InvalidInput if the lengths differ.
void emit_trace(const IterTrace& trace, const std::vector<BoundRow>& bounds, const std::filesystem::path& dir,
                const std::string& stem, const nlohmann::json& config);

/// Writes `text` to `path` byte-for-byte.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace softnpg
