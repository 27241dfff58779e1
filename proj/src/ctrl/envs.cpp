#include "kbplan/ctrl/envs.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

namespace kbplan::ctrl {

namespace {

std::string hex_id(uint64_t fingerprint) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fingerprint));
  return buf;
}

}  // namespace

NavEnvironment::NavEnvironment(const domains::NavConfig& cfg,
                               const std::string& true_time,
                               const std::string& true_weather,
                               std::vector<NavEvent> events, uint64_t seed)
    : cfg_(cfg),
      bundle_(domains::build_navigation_domain(cfg)),
      sim_(cfg, seed),
      events_(std::move(events)) {
  sim_.set_conditions(true_time, true_weather);
}

std::vector<std::string> NavEnvironment::sense() { return sim_.sense_facts(); }

BuiltModel NavEnvironment::build(const StrategySpec& spec,
                                 const std::vector<std::string>& facts) {
  std::vector<std::string> use;
  switch (spec.strategy) {
    case Strategy::icorpp:
    case Strategy::corpp:
    case Strategy::lr_pp:
      use = facts;
      break;
    case Strategy::stationary:
    case Strategy::pp_only:
      use = {};  // the declared defaults stand in for everything
      break;
    default:
      throw std::invalid_argument(strategy_name(spec) +
                                  " is not defined for the navigation domain");
  }
  std::sort(use.begin(), use.end());

  BuiltModel b;
  b.m = domains::build_navigation_model(cfg_, use);
  b.ss = model::log_reason(bundle_, use);
  b.facts = use;
  b.fingerprint = b.m.fingerprint();
  b.model_id = hex_id(b.fingerprint);
  return b;
}

bool NavEnvironment::consistent(const BuiltModel& active,
                                const std::vector<std::string>& facts) {
  return check_consistency(bundle_, facts, active.ss);
}

int NavEnvironment::true_state(const BuiltModel& built) const {
  auto infos = domains::navigation_states(built.ss);
  for (size_t s = 0; s < infos.size(); ++s)
    if (infos[s].row == sim_.row() && infos[s].col == sim_.col() &&
        infos[s].term == sim_.done())
      return static_cast<int>(s);
  return -1;
}

StepOutcome NavEnvironment::step(const BuiltModel& built, int action) {
  auto out = sim_.step(built.m.action_names[action]);
  reached_goal_ = reached_goal_ || out.reached_goal;
  ++actions_taken_;
  for (const auto& ev : events_) {
    if (ev.after_actions != actions_taken_) continue;
    if (!ev.set_time.empty() || !ev.set_weather.empty())
      sim_.set_conditions(ev.set_time.empty() ? sim_.true_time() : ev.set_time,
                          ev.set_weather.empty() ? sim_.true_weather()
                                                 : ev.set_weather);
    if (!ev.relocate_walker.empty()) sim_.relocate_walker(ev.relocate_walker);
  }
  return {out.reward, -1, out.terminated};
}

void NavEnvironment::finish(EpisodeTrace& trace) const {
  trace.success = reached_goal_;
}

DialogEnvironment::DialogEnvironment(const domains::DialogConfig& cfg,
                                     const domains::RequestTriple& truth,
                                     const std::string& told_time,
                                     uint64_t seed)
    : cfg_(cfg),
      bundle_(domains::build_dialog_domain(cfg)),
      sim_(cfg, seed),
      truth_(truth),
      told_time_(told_time),
      rng_(seed ^ 0xd1b54a32d192ed03ull) {
  sim_.set_request(truth);
}

int DialogEnvironment::truth_index(const BuiltModel& built) const {
  std::string name = "req_item=" + truth_.item + ",req_room=" + truth_.room +
                     ",req_person=" + truth_.person;
  for (int s = 0; s < built.m.n_states; ++s)
    if (built.m.state_names[s] == name) return s;
  return -1;
}

std::vector<std::string> DialogEnvironment::sense() {
  std::vector<std::string> f;
  if (!told_time_.empty()) f.push_back("curr_time = " + told_time_);
  for (const auto& u : cfg_.unavailable) f.push_back("-available(" + u + ")");
  return f;
}

BuiltModel DialogEnvironment::build(const StrategySpec& spec,
                                    const std::vector<std::string>& facts) {
  std::string time_fact;
  std::vector<std::string> unavail;
  for (const auto& f : facts) {
    if (f.rfind("-available(", 0) == 0)
      unavail.push_back(f.substr(11, f.size() - 12));
    else if (f.rfind("curr_time", 0) == 0)
      time_fact = f;
  }

  domains::DialogConfig c = cfg_;
  std::vector<std::string> sensed;
  bool uniform_prior = false;
  switch (spec.strategy) {
    case Strategy::icorpp:
    case Strategy::corpp:
    case Strategy::reasoning_only:
      c.unavailable = unavail;
      if (!time_fact.empty()) sensed.push_back(time_fact);
      break;
    case Strategy::defined_k:
    case Strategy::lr_pp:
      // Logical knowledge only: spaces respect the facts, worlds stay
      // equally probable.
      c.unavailable = unavail;
      uniform_prior = true;
      break;
    case Strategy::pp_only:
      c.unavailable.clear();
      uniform_prior = true;
      break;
    case Strategy::stationary:
      c.unavailable.clear();  // the one default-knowledge model
      break;
  }

  auto parts = domains::build_dialog_model(c, sensed);
  if (uniform_prior) {
    int live = 0;
    for (int s = 0; s < parts.m.n_states; ++s)
      if (!parts.m.terminal[s]) ++live;
    for (int s = 0; s < parts.m.n_states; ++s)
      parts.m.prior[s] = parts.m.terminal[s] ? 0.0 : 1.0 / live;
  }

  BuiltModel b;
  b.m = std::move(parts.m);
  b.ss = std::move(parts.ss);
  b.facts = sensed;
  for (const auto& u : c.unavailable) b.facts.push_back("-available(" + u + ")");
  std::sort(b.facts.begin(), b.facts.end());
  b.fingerprint = b.m.fingerprint();
  b.model_id = hex_id(b.fingerprint);
  return b;
}

bool DialogEnvironment::consistent(const BuiltModel& active,
                                   const std::vector<std::string>& facts) {
  return check_consistency(bundle_, facts, active.ss);
}

std::optional<QuestionPlan> DialogEnvironment::question_plan(
    const BuiltModel& built) const {
  QuestionPlan qp;
  int n_questions = 0;
  for (size_t a = 0; a < built.m.action_names.size(); ++a) {
    const auto& name = built.m.action_names[a];
    if (name.rfind("ask_", 0) == 0) {
      qp.wh_actions.push_back(static_cast<int>(a));
      ++n_questions;
    } else if (name.rfind("confirm_", 0) == 0) {
      qp.confirm_actions.push_back(static_cast<int>(a));
      ++n_questions;
    }
  }
  // Deliveries enumerate the request states in state order.
  qp.deliver_for_state.assign(built.m.n_states, -1);
  for (int s = 0; s < built.m.n_states; ++s)
    if (!built.m.terminal[s]) qp.deliver_for_state[s] = n_questions + s;
  return qp;
}

StepOutcome DialogEnvironment::step(const BuiltModel& built, int action) {
  const auto& name = built.m.action_names[action];
  if (name.rfind("deliver_", 0) == 0) {
    double r = sim_.deliver(name);
    delivered_ = true;
    // The delivery for the truth's state index is the only success.
    auto plan = question_plan(built);
    int s = truth_index(built);
    if (s >= 0 && plan->deliver_for_state[s] == action) success_ = true;
    return {r, -1, true};
  }

  // Questions leave the request unchanged, so the answer comes from the
  // model's observation row at the true request.
  int s = truth_index(built);
  if (s < 0)
    throw std::runtime_error("the true request '" + truth_.item + "," +
                             truth_.room + "," + truth_.person +
                             "' is outside the active model");
  double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
  int z = built.m.n_obs - 1;
  double cum = 0.0;
  for (int k = 0; k < built.m.n_obs; ++k) {
    cum += built.m.o(s, action, k);
    if (u < cum) {
      z = k;
      break;
    }
  }
  double cost = name.rfind("ask_", 0) == 0 ? cfg_.r_w : cfg_.r_p;
  qa_cost_ += cost;
  return {-cost, z, false};
}

void DialogEnvironment::finish(EpisodeTrace& trace) const {
  trace.success = success_;
  trace.qa_cost = qa_cost_;
}

}  // namespace kbplan::ctrl
