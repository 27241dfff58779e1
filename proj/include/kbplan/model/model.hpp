#pragma once
// Decision-model data structures shared by the builders and the planners.

#include <cstdint>
#include <string>
#include <vector>

namespace kbplan::model {

// Set of possible worlds projected onto the task-relevant attribute
// instances.  States are canonically sorted so the index is reproducible.
struct StateSpace {
  std::vector<std::string> attrs;   // relevant attribute names, in task order
  std::vector<int> insts;           // ground instance ids, grouped by attr
  std::vector<int> attr_first;      // insts offset per attr (size attrs+1)
  std::vector<std::vector<int16_t>> states;  // one value vector per state
  std::vector<std::string> names;   // rendered labels, parallel to states

  int size() const { return static_cast<int>(states.size()); }
  // Index of a projected value vector, -1 if it is not a state.
  int find(const std::vector<int16_t>& v) const;
};

using PriorBelief = std::vector<double>;

// Raw transition table plus the notes the builder took while fixing rows up
// (mass sent to self-loops, renormalised rows).
struct Transitions {
  int n_states = 0;
  int n_actions = 0;
  std::vector<double> t;  // row-major [s][a][s2]
  std::vector<std::string> notes;

  double& at(int s, int a, int s2) {
    return t[(static_cast<size_t>(s) * n_actions + a) * n_states + s2];
  }
  double at(int s, int a, int s2) const {
    return t[(static_cast<size_t>(s) * n_actions + a) * n_states + s2];
  }
};

// Fully assembled (PO)MDP.  Terminal states are absorbing and reward-free;
// observation tables are present only when `pomdp` is set.
struct DecisionModel {
  bool pomdp = false;
  int n_states = 0;
  int n_actions = 0;
  int n_obs = 0;
  std::vector<std::string> state_names;
  std::vector<std::string> action_names;
  std::vector<std::string> obs_names;
  std::vector<double> trans;    // [s][a][s2]
  std::vector<double> reward;   // [s][a]
  std::vector<double> obs;      // [s2][a][z], empty for MDPs
  std::vector<uint8_t> terminal;
  PriorBelief prior;            // empty for MDPs
  double gamma = 0.95;

  double t(int s, int a, int s2) const {
    return trans[(static_cast<size_t>(s) * n_actions + a) * n_states + s2];
  }
  double r(int s, int a) const {
    return reward[static_cast<size_t>(s) * n_actions + a];
  }
  double o(int s2, int a, int z) const {
    return obs[(static_cast<size_t>(s2) * n_actions + a) * n_obs + z];
  }

  // Content hash used to pair saved policies with the model they solve.
  uint64_t fingerprint() const;
};

}  // namespace kbplan::model
