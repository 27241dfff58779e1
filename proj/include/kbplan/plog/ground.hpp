#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kbplan/plog/ast.hpp"

namespace kbplan::plog {

// Fully instantiated program. Attribute instances (one per ground argument
// tuple) and their value domains are interned as dense integer ids; rules,
// random selections and pr-atoms reference those ids. Stratification and the
// random-attribute dependency order are computed here and reused by the
// world enumerator.
struct GroundProgram {
  struct SortInfo {
    std::string name;
    std::vector<std::string> objects;
  };
  struct AttrInfo {
    std::string name;
    std::vector<int> arg_sorts;
    int range_sort = 0;  // 0 = boolean
    int first_inst = 0;
    int n_inst = 0;
  };
  struct InstInfo {
    int attr = 0;
    std::vector<int> args;  // object indices per argument position
    std::string label;      // e.g. "sunny(rw0,cl2)"
    int n_values = 0;
    int node_base = 0;  // first (inst,value) node id
    bool is_boolean = false;
  };
  struct GLit {
    int inst = 0;
    int value = 0;
    bool neq = false;
    bool naf = false;
  };
  struct GRule {
    int head_inst = -1;  // -1: constraint
    int head_value = -1;
    std::vector<GLit> body;
    int stratum = 0;
  };
  struct GRandom {
    int inst = 0;
    std::vector<GLit> condition;
    // candidate values with the qualifier instance gating each (or -1)
    std::vector<std::pair<int, int>> range;
    int src = 0;  // index into Program::randoms, for error messages
  };
  struct GPr {
    int inst = 0;
    int value = 0;
    double prob = 0.0;
    std::vector<GLit> condition;
  };

  std::vector<SortInfo> sorts;  // sorts[0] is builtin boolean
  std::vector<AttrInfo> attrs;
  std::vector<InstInfo> insts;
  std::vector<GRule> rules;        // sorted by stratum, constraints excluded
  std::vector<GRule> constraints;  // headless rules, checked on total worlds
  std::vector<GRandom> randoms;
  std::vector<GPr> pratoms;

  // indices
  std::vector<int> random_order;        // instance ids in choice order
  std::vector<int> random_slot;         // inst -> position in random_order or -1
  std::vector<uint64_t> inst_support;   // inst -> bitmask over random_order slots
  std::vector<std::vector<int>> sels_of;  // inst -> indices into randoms
  std::vector<std::vector<int>> prs_of;   // inst -> indices into pratoms
  int n_strata = 0;

  int n_insts() const { return static_cast<int>(insts.size()); }
  bool is_random(int inst) const { return random_slot[inst] >= 0; }

  int find_attr(const std::string& name) const;          // -1 if absent
  int find_inst(const std::string& name, const std::vector<std::string>& args) const;
  int find_value(int inst, const std::string& name) const;  // -1 if absent
  const std::string& value_name(int inst, int value) const;

  // Resolves a ground AST literal (e.g. parsed evidence) against this program.
  GLit resolve(const Literal& lit) const;

  // Attribute names whose distributions an intervention on `attr` may change:
  // reachability over rule/selection/pr edges with constraints coupling the
  // attributes they mention. Used by the do/obs contrast tests.
  std::vector<std::string> influence_descendants(const std::string& attr) const;
};

GroundProgram ground(const Program& prog);

}  // namespace kbplan::plog
