#include "softnpg/trace_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace softnpg {

namespace {

bool is_npg_kind(const std::string& kind) { return kind == "npg" || kind == "spi" || kind == "inexact"; }

bool within(double metric, double bound, double tol) { return metric < kMetricFloor || metric <= bound + tol; }

void append(std::string& out, const std::optional<double>& value) {
  if (value) out += format_double(*value);
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::vector<BoundRow> theorem_bounds(const IterTrace& trace) {
  std::vector<BoundRow> rows(trace.records.size());
  if (trace.records.empty() || !trace.eta) return rows;
  const double eta = *trace.eta;
  const double rate = 1.0 - eta * trace.tau;
  if (is_npg_kind(trace.kind)) {
    const double q_tol = 1e-8 * (1.0 + trace.c1);
    for (std::size_t t = 1; t < rows.size(); ++t) {
      const double core = std::pow(rate, static_cast<double>(t - 1)) * trace.c1 + trace.c2;
      BoundRow& row = rows[t];
      row.bound_q = trace.gamma * core;
      row.bound_logpi = 2.0 / trace.tau * core;
      const IterRecord& rec = trace.records[t];
      row.pass = within(rec.q_gap, *row.bound_q, q_tol) && within(rec.logpi_gap, *row.bound_logpi, 1e-8);
    }
  } else if (trace.kind == "bandit") {
    const double gap0 = trace.records[0].logpi_gap;
    for (std::size_t t = 0; t < rows.size(); ++t) {
      BoundRow& row = rows[t];
      row.bound_logpi = 2.0 * std::pow(rate, static_cast<double>(t)) * gap0;
      row.pass = within(trace.records[t].logpi_gap, *row.bound_logpi, 1e-10);
    }
  }
  return rows;
}

std::string trace_csv(const IterTrace& trace, const std::vector<BoundRow>& bounds) {
  if (bounds.size() != trace.records.size()) throw InvalidInput("trace and bound rows differ in length");
  std::string out = "iter,q_gap,logpi_gap,v_gap,value_at_rho,xi_gap,bound_q,bound_logpi,pass\n";
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    const IterRecord& rec = trace.records[i];
    const BoundRow& row = bounds[i];
    out += std::to_string(rec.iter);
    for (double v : {rec.q_gap, rec.logpi_gap, rec.v_gap, rec.value_at_rho}) {
      out += ',';
      out += format_double(v);
    }
    out += ',';
    append(out, rec.xi_gap);
    out += ',';
    append(out, row.bound_q);
    out += ',';
    append(out, row.bound_logpi);
    out += ',';
    if (row.pass) out += *row.pass ? "1" : "0";
    out += '\n';
  }
  return out;
}

nlohmann::json trace_summary(const IterTrace& trace, const nlohmann::json& config) {
  nlohmann::json j;
  j["config"] = config;
  j["kind"] = trace.kind;
  j["gamma"] = trace.gamma;
  j["tau"] = trace.tau;
  j["eta"] = trace.eta ? nlohmann::json(*trace.eta) : nlohmann::json(nullptr);
  j["alpha"] = trace.eta ? nlohmann::json(trace.alpha()) : nlohmann::json(nullptr);
  j["beta"] = trace.beta ? nlohmann::json(*trace.beta) : nlohmann::json(nullptr);
  j["delta"] = trace.delta;
  j["c1"] = trace.c1;
  j["c2"] = trace.c2;
  j["oracle_residual"] = trace.oracle_residual;
  j["iterations"] = trace.records.empty() ? 0 : static_cast<long>(trace.records.size()) - 1;
  if (trace.xi_init_gap) j["xi_init_gap"] = *trace.xi_init_gap;
  if (trace.kappa) j["kappa"] = *trace.kappa;
  if (!trace.records.empty()) {
    j["logpi_gap0"] = trace.records[0].logpi_gap;
    j["q_gap0"] = trace.records[0].q_gap;
  }
  if (is_npg_kind(trace.kind))
    j["bound_kind"] = "linear";
  else if (trace.kind == "bandit")
    j["bound_kind"] = "bandit";
  else
    j["bound_kind"] = "none";
  return j;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.close();
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

void emit_trace(const IterTrace& trace, const std::vector<BoundRow>& bounds, const std::filesystem::path& dir,
                const std::string& stem, const nlohmann::json& config) {
  const std::string csv = trace_csv(trace, bounds);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
  write_text_file(dir / (stem + ".csv"), csv);
  write_text_file(dir / (stem + ".json"), trace_summary(trace, config).dump(2) + "\n");
}

}  // namespace softnpg
