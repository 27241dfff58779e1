#pragma once
// Builders that turn a domain bundle plus the facts sensed so far into a
// decision model: state space from the logical reader, prior belief and
// transition table from the probabilistic reader, assembly with
// stochasticity checks.  The *_naive variants recompute the same result
// through an independent query path and exist for cross-checking.

#include <string>
#include <vector>

#include "kbplan/model/bundle.hpp"
#include "kbplan/model/model.hpp"
#include "kbplan/plog/engine.hpp"
#include "kbplan/plog/ground.hpp"

namespace kbplan::model {

// Source text for the sensed-fact fragment appended to every reasoning
// call: one fact per sensed literal, the declared default for every
// exogenous attribute no sensed literal mentions, and a uniform selection
// for exogenous attributes left with neither (they get marginalised).
// Boolean exogenous attributes need no default; unstated instances are
// simply false.
std::string facts_fragment(const plog::Program& base, const TaskSpec& task,
                           const std::vector<std::string>& sensed);

// Parses `base_text` + the sensed-fact fragment and grounds the result.
plog::GroundProgram ground_with_facts(const std::string& base_text,
                                      const TaskSpec& task,
                                      const std::vector<std::string>& sensed);

// Logical reasoning: enumerate the worlds consistent with the rules and the
// sensed facts, project them onto the relevant attributes, and return the
// deduplicated, canonically ordered state space.
StateSpace log_reason(const DomainBundle& bundle,
                      const std::vector<std::string>& sensed);

// Probabilistic reasoning over domain + priors: the belief over `ss`.
PriorBelief prob_reason(const DomainBundle& bundle,
                        const std::vector<std::string>& sensed,
                        const StateSpace& ss);
// Same belief, one conditional query per state instead of one enumeration.
PriorBelief prob_reason_naive(const DomainBundle& bundle,
                              const std::vector<std::string>& sensed,
                              const StateSpace& ss);

// Transition synthesis over domain + dynamics: for every state/action pair
// the successor distribution, read from one conditioned enumeration per
// pair.  Mass on successors outside the state space moves to the self-loop
// (noted), rows further than 1e-6 from stochastic are renormalised (noted),
// and a row with no mass at all is an error.
Transitions dyn_reason(const DomainBundle& bundle,
                       const std::vector<std::string>& sensed,
                       const StateSpace& ss);
// Reference implementation: one conjunction query per (s, a, s') triple.
// `pairs` optionally restricts the (s, a) rows computed (empty = all);
// skipped rows are left zero.
Transitions dyn_reason_naive(const DomainBundle& bundle,
                             const std::vector<std::string>& sensed,
                             const StateSpace& ss,
                             const std::vector<std::pair<int, int>>& pairs = {});

// Final assembly.  Verifies every transition row is stochastic to 1e-9 and
// every reward finite, forces terminal states absorbing and reward-free,
// and attaches the observation table / prior when one is supplied (making
// the model partially observable).
DecisionModel assemble_model(const TaskSpec& task, const StateSpace& ss,
                             const Transitions& tr,
                             const std::vector<double>& reward,
                             const std::vector<uint8_t>& terminal,
                             const std::vector<std::string>& obs_names = {},
                             const std::vector<double>& obs = {},
                             PriorBelief prior = {});

// Helper shared by the builders: the defining conjunction of state `s`
// ("curr_row = rw2", "-sunny(rw0,cl2)", ...) as query literals resolved
// against `gp`, which may be any composition that declares the relevant
// attributes over the same sorts.
std::vector<plog::Literal> state_conjunction(const plog::GroundProgram& gp,
                                             const StateSpace& ss, int s);

// Size of the unfactored assignment space over the task attributes: the
// product of the value-range sizes of every endogenous and exogenous
// attribute instance.  Exact for products up to 2^64.
long double naive_assignment_count(const plog::GroundProgram& gp,
                                   const TaskSpec& task);

}  // namespace kbplan::model
