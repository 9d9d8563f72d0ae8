#pragma once

// JSON MDP files:
//   {"n_states": S, "n_actions": A, "gamma": g,
//    "reward": [[r(0,0), ...], ...],            // [s][a]
//    "transition": [[[P(0|0,0), ...], ...], ...]} // [s][a][s']

#include "softnpg/mdp.hpp"

#include <filesystem>
#include <string>

namespace softnpg {

class MdpFormatError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// Parses an MDP document. Transition rows within 1e-9 of summing to one are
/// renormalized; anything else, or a reward outside [0,1], is rejected with
/// the offending field in the message.
TabularMdp parse_mdp(const std::string& text);
TabularMdp load_mdp(const std::filesystem::path& path);

std::string mdp_to_json(const TabularMdp& mdp);
void save_mdp(const TabularMdp& mdp, const std::filesystem::path& path);

}  // namespace softnpg
