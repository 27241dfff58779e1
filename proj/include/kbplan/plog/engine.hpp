#pragma once

#include <span>
#include <string>
#include <vector>

#include "kbplan/plog/ast.hpp"
#include "kbplan/plog/ground.hpp"

namespace kbplan::plog {

// obs filters worlds and renormalizes; do pins a random attribute's value
// without contributing a probability factor (the selection is bypassed).
struct Evidence {
  enum Kind { Obs, Do } kind = Obs;
  Literal lit;
};

// Total assignment over all attribute instances. Booleans default to false
// when underivable; functional attributes must be defined in every world.
struct PossibleWorld {
  std::vector<int16_t> values;

  bool operator==(const PossibleWorld&) const = default;
  bool operator<(const PossibleWorld& o) const { return values < o.values; }
};

struct WorldDistribution {
  std::vector<PossibleWorld> worlds;  // canonical (lexicographic) order
  std::vector<double> probs;          // > 0, sums to 1
};

inline constexpr double kProbTol = 1e-9;

// Enumerates the possible worlds of a ground program under evidence.
// Throws EvalError on: conflicting applicable pr-atoms, declared mass > 1,
// more than one active selection for an instance, undefined functional
// attribute, do on a non-random attribute, or zero consistent worlds.
WorldDistribution enumerate_worlds(const GroundProgram& gp,
                                   std::span<const Evidence> evidence = {});

// Probability of a ground literal: sum of consistent-world probabilities
// where it holds.
double query(const GroundProgram& gp, const Literal& target,
             std::span<const Evidence> evidence = {});

// Joint probability of a conjunction of ground literals.
double query_conj(const GroundProgram& gp, std::span<const Literal> targets,
                  std::span<const Evidence> evidence = {});

bool holds(const GroundProgram& gp, const PossibleWorld& w, const GroundProgram::GLit& lit);

std::string world_to_string(const GroundProgram& gp, const PossibleWorld& w);

}  // namespace kbplan::plog
