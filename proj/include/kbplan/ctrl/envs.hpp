#pragma once
// Environment adapters gluing the benchmark domains to the episode
// controller: they sense exogenous facts, apply the per-strategy build
// transforms and step the ground-truth simulators.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "kbplan/ctrl/ctrl.hpp"
#include "kbplan/domains/dialog.hpp"
#include "kbplan/domains/navigation.hpp"

namespace kbplan::ctrl {

// Exogenous event applied right after `after_actions` actions have been
// taken, so the next sensing pass sees it.  Empty fields leave the world
// aspect unchanged.
struct NavEvent {
  int after_actions = 0;
  std::string set_time;
  std::string set_weather;
  std::vector<std::pair<int, int>> relocate_walker;
};

class NavEnvironment : public Environment {
 public:
  NavEnvironment(const domains::NavConfig& cfg, const std::string& true_time,
                 const std::string& true_weather, std::vector<NavEvent> events,
                 uint64_t seed);

  std::string name() const override { return "navigation"; }
  std::string kind() const override { return "mdp"; }
  std::vector<std::string> sense() override;
  BuiltModel build(const StrategySpec& spec,
                   const std::vector<std::string>& facts) override;
  bool consistent(const BuiltModel& active,
                  const std::vector<std::string>& facts) override;
  int true_state(const BuiltModel& built) const override;
  bool terminal() const override { return sim_.done(); }
  StepOutcome step(const BuiltModel& built, int action) override;
  void finish(EpisodeTrace& trace) const override;

  const domains::NavSimulator& simulator() const { return sim_; }

 private:
  domains::NavConfig cfg_;
  model::DomainBundle bundle_;
  domains::NavSimulator sim_;
  std::vector<NavEvent> events_;
  int actions_taken_ = 0;
  bool reached_goal_ = false;
};

class DialogEnvironment : public Environment {
 public:
  // `told_time` is what the time sensor reports (the knowledge condition
  // decides it); empty reports nothing and the model falls back to its
  // default or marginalises.
  //
  // Answers to questions are drawn from the active model's observation row
  // at the true request: a recogniser only ever outputs words from its own
  // vocabulary, so a strategy with a narrower model hears sharper answers.
  DialogEnvironment(const domains::DialogConfig& cfg,
                    const domains::RequestTriple& truth,
                    const std::string& told_time, uint64_t seed);

  std::string name() const override { return "dialog"; }
  std::string kind() const override { return "pomdp"; }
  std::vector<std::string> sense() override;
  BuiltModel build(const StrategySpec& spec,
                   const std::vector<std::string>& facts) override;
  bool consistent(const BuiltModel& active,
                  const std::vector<std::string>& facts) override;
  int true_state(const BuiltModel&) const override { return -1; }
  bool terminal() const override { return sim_.done(); }
  StepOutcome step(const BuiltModel& built, int action) override;
  std::optional<QuestionPlan> question_plan(const BuiltModel& built) const override;
  void finish(EpisodeTrace& trace) const override;

  const domains::RequestTriple& truth() const { return truth_; }

 private:
  int truth_index(const BuiltModel& built) const;

  domains::DialogConfig cfg_;
  model::DomainBundle bundle_;
  domains::DialogSimulator sim_;
  domains::RequestTriple truth_;
  std::string told_time_;
  std::mt19937_64 rng_;
  double qa_cost_ = 0.0;
  bool delivered_ = false;
  bool success_ = false;
};

}  // namespace kbplan::ctrl
