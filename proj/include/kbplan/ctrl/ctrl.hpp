#pragma once
// Episode controller: sense exogenous facts, reason them into a model,
// solve it, then act while the sensed facts stay consistent with the worlds
// the model was built from.  Strategies select how much of that pipeline
// runs and how often.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "kbplan/model/build.hpp"
#include "kbplan/model/bundle.hpp"
#include "kbplan/model/model.hpp"
#include "kbplan/plan/plan.hpp"

namespace kbplan::ctrl {

enum class Strategy {
  icorpp,          // full pipeline, replans when the world set changes
  corpp,           // reasons once per episode, never replans
  stationary,      // one default-knowledge model reused everywhere
  lr_pp,           // logical worlds only: uniform prior over them
  pp_only,         // no reasoning at all: default spaces, uniform prior
  defined_k,       // scripted question rounds, then argmax delivery
  reasoning_only,  // argmax of the reasoned prior, no questions
};

struct StrategySpec {
  Strategy strategy = Strategy::icorpp;
  int defined_kind = 3;  // 1 = wh questions, 2 = confirmations, 3 = both
};

// Accepts iCORPP, CORPP, stationary, LR+PP, PP-only, Defined-1/2/3,
// reasoning-only (case-insensitive).  Throws std::invalid_argument.
StrategySpec parse_strategy(const std::string& name);
std::string strategy_name(const StrategySpec& spec);

// Everything the episode loop needs about a constructed model.
struct BuiltModel {
  model::DecisionModel m;
  model::StateSpace ss;            // the worlds backing the consistency check
  std::vector<std::string> facts;  // facts the build consumed, canonical order
  uint64_t fingerprint = 0;
  std::string model_id;            // fingerprint rendered for the trace
};

struct StepOutcome {
  double reward = 0.0;
  int observation = -1;  // model observation index, -1 when none
  bool terminated = false;
};

// Scripted-strategy structure a question/delivery domain exposes.
struct QuestionPlan {
  std::vector<int> wh_actions;
  std::vector<int> confirm_actions;
  std::vector<int> deliver_for_state;  // delivery action per state, -1 = none
};

// What the controller needs from an environment: sensing, model building,
// stepping the hidden true world, and termination.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual std::string name() const = 0;
  virtual std::string kind() const = 0;  // "mdp" or "pomdp"
  // Exogenous facts as the sensors report them right now.
  virtual std::vector<std::string> sense() = 0;
  // Model the strategy would plan with under the sensed facts.
  virtual BuiltModel build(const StrategySpec& spec,
                           const std::vector<std::string>& facts) = 0;
  // Do the current facts regenerate the worlds the model was built from?
  virtual bool consistent(const BuiltModel& active,
                          const std::vector<std::string>& facts) = 0;
  // Fully observable current state resolved against a model, -1 if hidden.
  virtual int true_state(const BuiltModel& built) const = 0;
  virtual bool terminal() const = 0;
  virtual StepOutcome step(const BuiltModel& built, int action) = 0;
  virtual std::optional<QuestionPlan> question_plan(const BuiltModel&) const {
    return std::nullopt;
  }
  // Stamps domain outcomes (success, question cost) onto a finished trace.
  virtual void finish(struct EpisodeTrace&) const {}
};

struct ReplanEvent {
  int step = 0;  // acting step at which the consistency check failed
  std::vector<std::string> facts_added;
  std::vector<std::string> facts_removed;
  std::string violating_fact;  // first element of the diff
  std::string note;            // why this counted as inconsistent
};

struct StepRecord {
  int step = 0;
  std::string model_id;
  int state = -1;  // observable state before acting, -1 when hidden
  int action = -1;
  std::string action_name;
  double reward = 0.0;
  int observation = -1;
  std::string obs_name;
  bool belief_reset = false;  // impossible observation, belief re-seeded
  std::vector<std::string> sensed;  // exogenous facts after the action
};

struct EpisodeTrace {
  std::string domain;
  std::string strategy;
  uint64_t seed = 0;
  std::vector<StepRecord> steps;
  std::vector<ReplanEvent> replans;
  std::vector<std::string> model_ids;  // one per contiguous plan segment
  bool reached_terminal = false;
  bool truncated = false;  // step limit hit first
  bool success = false;
  double qa_cost = 0.0;
  double cumulative_reward = 0.0;
  int step_count = 0;
};

// Solved policies keyed by model fingerprint; safe to share across threads.
class PolicyCache {
 public:
  struct Entry {
    uint64_t fingerprint = 0;
    std::optional<plan::MdpPolicy> mdp;
    std::optional<plan::AlphaVectorPolicy> pomdp;
  };

  std::optional<Entry> find(uint64_t fingerprint) const;
  void insert(Entry e);
  size_t size() const;

 private:
  mutable std::mutex mu_;
  std::map<uint64_t, Entry> map_;
};

struct ControllerConfig {
  StrategySpec strategy;
  int defined_rounds = 1;
  bool replan_on_inconsistency = true;
  int step_limit = 500;
  uint64_t seed = 0;
  int belief_budget = 64;    // PBVI belief set size
  int solve_sweeps = 120;    // PBVI backup sweeps
  double vi_eps = 1e-6;      // value-iteration residual target
  int vi_max_iter = 200000;
  bool parallel = true;
  std::shared_ptr<PolicyCache> cache;  // optional, shared across episodes
};

// True iff rerunning the logical reader under `facts` yields the same world
// set (attribute list and canonical state labels both equal).
bool check_consistency(const model::DomainBundle& bundle,
                       const std::vector<std::string>& facts,
                       const model::StateSpace& worlds);

// One sense-reason-plan-act episode.  Deterministic per (environment
// construction, config, seed).
EpisodeTrace run_episode(Environment& env, const ControllerConfig& cfg);

// Line-delimited trace serialization: one record per step, one per replan,
// one trailing summary; every line carries the schema tag.
void write_trace_jsonl(std::ostream& out, const EpisodeTrace& trace);

}  // namespace kbplan::ctrl
