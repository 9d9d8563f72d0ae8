#include "softnpg/mdp_io.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace softnpg {

namespace {

using nlohmann::json;

constexpr double kRenormalizeTol = 1e-9;

const json& field(const json& doc, const char* name) {
  if (!doc.contains(name)) throw MdpFormatError(std::string("missing field '") + name + "'");
  return doc.at(name);
}

double number(const json& value, const std::string& where) {
  if (!value.is_number()) throw MdpFormatError("expected a number at " + where);
  return value.get<double>();
}

int positive_int(const json& doc, const char* name) {
  const json& v = field(doc, name);
  if (!v.is_number_integer() || v.get<long long>() < 1)
    throw MdpFormatError(std::string("field '") + name + "' must be a positive integer");
  return static_cast<int>(v.get<long long>());
}

const json& array_of(const json& v, std::size_t n, const std::string& where) {
  if (!v.is_array() || v.size() != n)
    throw MdpFormatError("expected an array of length " + std::to_string(n) + " at " + where);
  return v;
}

}  // namespace

TabularMdp parse_mdp(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw MdpFormatError(std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw MdpFormatError("MDP document must be a JSON object");
  const int n_states = positive_int(doc, "n_states");
  const int n_actions = positive_int(doc, "n_actions");
  const double gamma = number(field(doc, "gamma"), "gamma");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw MdpFormatError("gamma must lie in [0,1)");

  Matrix reward(n_states, n_actions);
  const json& r = array_of(field(doc, "reward"), n_states, "reward");
  for (int s = 0; s < n_states; ++s) {
    const std::string row_at = "reward[" + std::to_string(s) + "]";
    const json& row = array_of(r[s], n_actions, row_at);
    for (int a = 0; a < n_actions; ++a) {
      const std::string at = row_at + "[" + std::to_string(a) + "]";
      const double value = number(row[a], at);
      if (!(value >= 0.0 && value <= 1.0)) throw MdpFormatError("reward outside [0,1] at " + at);
      reward(s, a) = value;
    }
  }

  Matrix transition(static_cast<Eigen::Index>(n_states) * n_actions, n_states);
  const json& p = array_of(field(doc, "transition"), n_states, "transition");
  for (int s = 0; s < n_states; ++s) {
    const json& per_action = array_of(p[s], n_actions, "transition[" + std::to_string(s) + "]");
    for (int a = 0; a < n_actions; ++a) {
      const std::string row_at = "transition[" + std::to_string(s) + "][" + std::to_string(a) + "]";
      const json& row = array_of(per_action[a], n_states, row_at);
      const Eigen::Index idx = static_cast<Eigen::Index>(s) * n_actions + a;
      for (int sp = 0; sp < n_states; ++sp) {
        const std::string at = row_at + "[" + std::to_string(sp) + "]";
        const double value = number(row[sp], at);
        if (!(value >= 0.0)) throw MdpFormatError("negative transition probability at " + at);
        transition(idx, sp) = value;
      }
      const double total = transition.row(idx).sum();
      if (std::abs(total - 1.0) > kRenormalizeTol) {
        std::ostringstream os;
        os << "transition row " << row_at << " sums to " << total;
        throw MdpFormatError(os.str());
      }
      // Rows that are stochastic up to summation round-off are kept as
      // written so that saved files load back bit for bit.
      if (std::abs(total - 1.0) > 64.0 * std::numeric_limits<double>::epsilon() * n_states)
        transition.row(idx) /= total;
    }
  }
  try {
    return TabularMdp(std::move(transition), std::move(reward), gamma);
  } catch (const InvalidInput& e) {
    throw MdpFormatError(e.what());
  }
}

TabularMdp load_mdp(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MdpFormatError("cannot open MDP file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_mdp(buffer.str());
  } catch (const MdpFormatError& e) {
    throw MdpFormatError(path.string() + ": " + e.what());
  }
}

std::string mdp_to_json(const TabularMdp& mdp) {
  json doc;
  doc["n_states"] = mdp.n_states();
  doc["n_actions"] = mdp.n_actions();
  doc["gamma"] = mdp.gamma();
  json reward = json::array();
  json transition = json::array();
  for (int s = 0; s < mdp.n_states(); ++s) {
    json r_row = json::array();
    json p_state = json::array();
    for (int a = 0; a < mdp.n_actions(); ++a) {
      r_row.push_back(mdp.reward()(s, a));
      json p_row = json::array();
      for (int sp = 0; sp < mdp.n_states(); ++sp) p_row.push_back(mdp.p(s, a, sp));
      p_state.push_back(std::move(p_row));
    }
    reward.push_back(std::move(r_row));
    transition.push_back(std::move(p_state));
  }
  doc["reward"] = std::move(reward);
  doc["transition"] = std::move(transition);
  return doc.dump(1) + "\n";
}

void save_mdp(const TabularMdp& mdp, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write MDP file " + path.string());
  out << mdp_to_json(mdp);
  if (!out) throw std::runtime_error("failed writing MDP file " + path.string());
}

}  // namespace softnpg
