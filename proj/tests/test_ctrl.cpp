#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <memory>
#include <sstream>

#include "kbplan/ctrl/ctrl.hpp"
#include "kbplan/ctrl/envs.hpp"
#include "vendor/doctest.h"
#include "vendor/json.hpp"

using namespace kbplan;
using ctrl::ControllerConfig;
using ctrl::Strategy;

namespace {

domains::NavConfig calm_nav() {
  // Walker parked in a far corner: its patrol never changes the sensed
  // facts, so the world stays static unless a test injects an event.
  domains::NavConfig cfg;
  cfg.walker_path = {{4, 0}};
  return cfg;
}

ControllerConfig cfg_for(const std::string& strategy, uint64_t seed) {
  ControllerConfig c;
  c.strategy = ctrl::parse_strategy(strategy);
  c.seed = seed;
  c.belief_budget = 24;
  c.solve_sweeps = 120;
  return c;
}

std::string dump(const ctrl::EpisodeTrace& t) {
  std::ostringstream os;
  ctrl::write_trace_jsonl(os, t);
  return os.str();
}

}  // namespace

TEST_CASE("strategy names parse and print") {
  CHECK(ctrl::parse_strategy("iCORPP").strategy == Strategy::icorpp);
  CHECK(ctrl::parse_strategy("icorpp").strategy == Strategy::icorpp);
  CHECK(ctrl::parse_strategy("CORPP").strategy == Strategy::corpp);
  CHECK(ctrl::parse_strategy("stationary").strategy == Strategy::stationary);
  CHECK(ctrl::parse_strategy("LR+PP").strategy == Strategy::lr_pp);
  CHECK(ctrl::parse_strategy("PP-only").strategy == Strategy::pp_only);
  CHECK(ctrl::parse_strategy("reasoning-only").strategy ==
        Strategy::reasoning_only);
  auto d2 = ctrl::parse_strategy("Defined-2");
  CHECK(d2.strategy == Strategy::defined_k);
  CHECK(d2.defined_kind == 2);
  CHECK(ctrl::strategy_name(d2) == "Defined-2");
  CHECK(ctrl::strategy_name(ctrl::parse_strategy("lr-pp")) == "LR+PP");
  CHECK_THROWS_AS((void)ctrl::parse_strategy("magic"), std::invalid_argument);
  CHECK_THROWS_AS((void)ctrl::parse_strategy("Defined-4"),
                  std::invalid_argument);
}

TEST_CASE("static navigation episode: one model, zero replans, goal reached") {
  ctrl::NavEnvironment env(calm_nav(), "morning", "sunny", {}, 11);
  auto trace = ctrl::run_episode(env, cfg_for("iCORPP", 11));

  CHECK(trace.domain == "navigation");
  CHECK(trace.reached_terminal);
  CHECK(trace.success);
  CHECK_FALSE(trace.truncated);
  CHECK(trace.model_ids.size() == 1);
  CHECK(trace.replans.empty());
  CHECK(trace.step_count == static_cast<int>(trace.steps.size()));
  for (const auto& st : trace.steps) {
    CHECK(!st.action_name.empty());
    CHECK(st.state >= 0);
    CHECK(st.model_id == trace.model_ids[0]);
  }
}

TEST_CASE("weather flip mid-episode: replan recorded with the violating fact") {
  std::vector<ctrl::NavEvent> events;
  ctrl::NavEvent ev;
  ev.after_actions = 1;
  ev.set_weather = "cloudy";
  events.push_back(ev);

  ctrl::NavEnvironment env(calm_nav(), "morning", "sunny", events, 5);
  auto trace = ctrl::run_episode(env, cfg_for("iCORPP", 5));

  CHECK(trace.reached_terminal);
  REQUIRE(trace.replans.size() >= 1);
  CHECK(trace.model_ids.size() >= 2);
  const auto& rp = trace.replans[0];
  CHECK(rp.step >= 1);
  bool mentions_weather = false;
  for (const auto& f : rp.facts_added)
    if (f.find("cloudy") != std::string::npos) mentions_weather = true;
  CHECK(mentions_weather);
  CHECK(rp.violating_fact != "");
  CHECK(rp.note.find("world set") != std::string::npos);
}

TEST_CASE("stationary strategy ignores the same flip") {
  std::vector<ctrl::NavEvent> events;
  ctrl::NavEvent ev;
  ev.after_actions = 1;
  ev.set_weather = "cloudy";
  events.push_back(ev);

  ctrl::NavEnvironment env(calm_nav(), "morning", "sunny", events, 5);
  auto trace = ctrl::run_episode(env, cfg_for("stationary", 5));

  CHECK(trace.replans.empty());
  CHECK(trace.model_ids.size() == 1);
  CHECK(trace.reached_terminal);
}

TEST_CASE("corpp coincides with non-replanning icorpp on a static world") {
  ctrl::NavEnvironment env_a(calm_nav(), "morning", "sunny", {}, 21);
  auto cfg_a = cfg_for("CORPP", 21);
  auto ta = ctrl::run_episode(env_a, cfg_a);

  ctrl::NavEnvironment env_b(calm_nav(), "morning", "sunny", {}, 21);
  auto cfg_b = cfg_for("iCORPP", 21);
  cfg_b.replan_on_inconsistency = false;
  auto tb = ctrl::run_episode(env_b, cfg_b);

  REQUIRE(ta.steps.size() == tb.steps.size());
  for (size_t i = 0; i < ta.steps.size(); ++i) {
    CHECK(ta.steps[i].action == tb.steps[i].action);
    CHECK(ta.steps[i].reward == tb.steps[i].reward);
    CHECK(ta.steps[i].state == tb.steps[i].state);
  }
  CHECK(ta.cumulative_reward == tb.cumulative_reward);
  CHECK(ta.replans.empty());
  CHECK(tb.replans.empty());
}

TEST_CASE("replay determinism: identical runs give byte-identical traces") {
  std::vector<ctrl::NavEvent> events;
  ctrl::NavEvent ev;
  ev.after_actions = 2;
  ev.set_weather = "cloudy";
  events.push_back(ev);

  ctrl::NavEnvironment env_a(calm_nav(), "morning", "sunny", events, 33);
  ctrl::NavEnvironment env_b(calm_nav(), "morning", "sunny", events, 33);
  auto ta = ctrl::run_episode(env_a, cfg_for("iCORPP", 33));
  auto tb = ctrl::run_episode(env_b, cfg_for("iCORPP", 33));
  CHECK(dump(ta) == dump(tb));

  ctrl::DialogEnvironment denv_a(domains::dialog_paper_small(),
                                 {"regular", "r0", "alice"}, "morning", 7);
  ctrl::DialogEnvironment denv_b(domains::dialog_paper_small(),
                                 {"regular", "r0", "alice"}, "morning", 7);
  auto da = ctrl::run_episode(denv_a, cfg_for("iCORPP", 7));
  auto db = ctrl::run_episode(denv_b, cfg_for("iCORPP", 7));
  CHECK(dump(da) == dump(db));
}

TEST_CASE("policy cache: hits keep the model hash and skip re-solving") {
  auto cache = std::make_shared<ctrl::PolicyCache>();
  auto cfg = cfg_for("iCORPP", 3);
  cfg.cache = cache;

  ctrl::NavEnvironment env_a(calm_nav(), "morning", "sunny", {}, 3);
  auto ta = ctrl::run_episode(env_a, cfg);
  size_t after_first = cache->size();
  CHECK(after_first >= 1);

  // The cached entry's key is the model fingerprint of a fresh build.
  ctrl::NavEnvironment probe(calm_nav(), "morning", "sunny", {}, 3);
  auto built = probe.build(cfg.strategy, probe.sense());
  auto hit = cache->find(built.fingerprint);
  REQUIRE(hit.has_value());
  CHECK(hit->fingerprint == built.fingerprint);
  CHECK(hit->mdp.has_value());

  cfg.seed = 4;
  ctrl::NavEnvironment env_b(calm_nav(), "morning", "sunny", {}, 4);
  auto tb = ctrl::run_episode(env_b, cfg);
  CHECK(cache->size() == after_first);  // same fact set, no new solves

  // Cached and uncached runs act identically.
  ctrl::NavEnvironment env_c(calm_nav(), "morning", "sunny", {}, 4);
  auto cfg_nc = cfg_for("iCORPP", 4);
  auto tc = ctrl::run_episode(env_c, cfg_nc);
  CHECK(dump(tb) == dump(tc));
}

TEST_CASE("consistency check granularity") {
  domains::NavConfig nav = calm_nav();
  auto bundle = domains::build_navigation_domain(nav);
  std::vector<std::string> base = {"curr_time = morning",
                                   "curr_weather = sunny",
                                   "blocked(rw4, cl0)"};
  auto worlds = model::log_reason(bundle, base);

  CHECK(ctrl::check_consistency(bundle, base, worlds));

  // sunny -> cloudy defeats the sunlight default: worlds change.
  std::vector<std::string> cloudy = {"curr_time = morning",
                                     "curr_weather = cloudy",
                                     "blocked(rw4, cl0)"};
  CHECK_FALSE(ctrl::check_consistency(bundle, cloudy, worlds));

  // cloudy -> rainy: both defeat the default the same way.
  auto worlds_cloudy = model::log_reason(bundle, cloudy);
  std::vector<std::string> rainy = {"curr_time = morning",
                                    "curr_weather = rainy",
                                    "blocked(rw4, cl0)"};
  CHECK(ctrl::check_consistency(bundle, rainy, worlds_cloudy));

  // The walker moving does change the projected worlds.
  std::vector<std::string> moved = {"curr_time = morning",
                                    "curr_weather = sunny",
                                    "blocked(rw4, cl1)"};
  CHECK_FALSE(ctrl::check_consistency(bundle, moved, worlds));

  // Dialog: the time only shifts priors, never the worlds.
  auto dcfg = domains::dialog_paper_small();
  auto dbundle = domains::build_dialog_domain(dcfg);
  auto dworlds = model::log_reason(dbundle, {"curr_time = morning"});
  CHECK(ctrl::check_consistency(dbundle, {"curr_time = noon"}, dworlds));
  CHECK_FALSE(
      ctrl::check_consistency(dbundle, {"-available(regular)"}, dworlds));
}

TEST_CASE("dialog episode: questions then delivery, costs tracked") {
  ctrl::DialogEnvironment env(domains::dialog_paper_small(),
                              {"decaf", "r0", "bob"}, "morning", 19);
  auto trace = ctrl::run_episode(env, cfg_for("iCORPP", 19));

  CHECK(trace.reached_terminal);
  REQUIRE(trace.steps.size() >= 2);
  const auto& last = trace.steps.back();
  CHECK(last.action_name.rfind("deliver_", 0) == 0);
  CHECK(last.observation == -1);
  for (size_t i = 0; i + 1 < trace.steps.size(); ++i) {
    CHECK(trace.steps[i].observation >= 0);
    CHECK(!trace.steps[i].obs_name.empty());
  }
  CHECK(trace.qa_cost > 0.0);
  double cost_sum = 0.0;
  for (size_t i = 0; i + 1 < trace.steps.size(); ++i)
    cost_sum += -trace.steps[i].reward;
  CHECK(trace.qa_cost == doctest::Approx(cost_sum));
}

TEST_CASE("strategy build transforms") {
  domains::DialogConfig cfg = domains::dialog_paper_full();
  cfg.unavailable = {"soda"};
  ctrl::DialogEnvironment env(cfg, {"regular", "r0", "alice"}, "morning", 1);
  auto facts = env.sense();

  auto full = env.build(ctrl::parse_strategy("iCORPP"), facts);
  CHECK(full.m.n_states == 31);  // 5 items x 3 rooms x 2 persons, plus term
  double top = *std::max_element(full.m.prior.begin(), full.m.prior.end());
  CHECK(top == doctest::Approx(0.4 / 6.0).epsilon(1e-9));

  auto lr = env.build(ctrl::parse_strategy("LR+PP"), facts);
  CHECK(lr.m.n_states == 31);
  for (int s = 0; s < lr.m.n_states; ++s) {
    if (lr.m.terminal[s])
      CHECK(lr.m.prior[s] == 0.0);
    else
      CHECK(lr.m.prior[s] == doctest::Approx(1.0 / 30.0));
  }

  auto pp = env.build(ctrl::parse_strategy("PP-only"), facts);
  CHECK(pp.m.n_states == 37);  // ignores the availability facts entirely
  for (int s = 0; s < pp.m.n_states; ++s)
    if (!pp.m.terminal[s]) CHECK(pp.m.prior[s] == doctest::Approx(1.0 / 36.0));

  auto st = env.build(ctrl::parse_strategy("stationary"), facts);
  CHECK(st.m.n_states == 37);
  double st_top = *std::max_element(st.m.prior.begin(), st.m.prior.end());
  CHECK(st_top == doctest::Approx(0.4 / 6.0).epsilon(1e-9));

  // Hidden time with no default marginalises over the sort.
  domains::DialogConfig hidden = cfg;
  hidden.default_time = "";
  ctrl::DialogEnvironment henv(hidden, {"regular", "r0", "alice"}, "", 1);
  auto limited = henv.build(ctrl::parse_strategy("iCORPP"), henv.sense());
  double lim_top =
      *std::max_element(limited.m.prior.begin(), limited.m.prior.end());
  // 1/3 of the mass follows the morning prior, the rest is uniform.
  double expect = (0.4 / 6.0) / 3.0 + (2.0 / 3.0) / 30.0;
  CHECK(lim_top == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("defined policies follow the fixed schedule") {
  auto small = domains::dialog_paper_small();

  ctrl::DialogEnvironment env1(small, {"regular", "r0", "alice"}, "morning", 2);
  auto c1 = cfg_for("Defined-1", 2);
  auto t1 = ctrl::run_episode(env1, c1);
  REQUIRE(t1.steps.size() == 4);  // 3 wh questions, then the delivery
  CHECK(t1.steps[0].action_name == "ask_item");
  CHECK(t1.steps[1].action_name == "ask_room");
  CHECK(t1.steps[2].action_name == "ask_person");
  CHECK(t1.steps[3].action_name.rfind("deliver_", 0) == 0);
  CHECK(t1.qa_cost == doctest::Approx(3.0));

  ctrl::DialogEnvironment env3(domains::dialog_paper_full(),
                               {"regular", "r0", "alice"}, "morning", 2);
  auto t3 = ctrl::run_episode(env3, cfg_for("Defined-3", 2));
  REQUIRE(t3.steps.size() == 15);  // 3 wh + 11 confirmations + delivery
  CHECK(t3.qa_cost == doctest::Approx(3.0 + 11.0 * 2.0));

  // Noiseless sensing: one wh round pins the request exactly.
  domains::DialogConfig exact = small;
  exact.wh_base = 1.0;
  exact.wh_slope = 0.0;
  for (int seed = 0; seed < 10; ++seed) {
    ctrl::DialogEnvironment env(exact, {"decaf", "r0", "bob"}, "morning",
                                100 + seed);
    auto t = ctrl::run_episode(env, cfg_for("Defined-1", 100 + seed));
    CHECK(t.success);
  }

  // Two rounds double the questions.
  ctrl::DialogEnvironment env2(small, {"regular", "r0", "alice"}, "morning", 9);
  auto c2 = cfg_for("Defined-2", 9);
  c2.defined_rounds = 2;
  auto t2 = ctrl::run_episode(env2, c2);
  // A_p on the small preset: 2 items + 1 room + 2 persons = 5 confirmations.
  REQUIRE(t2.steps.size() == 2 * 5 + 1);
  CHECK(t2.qa_cost == doctest::Approx(2.0 * 5.0 * 2.0));
}

TEST_CASE("reasoning-only delivers immediately from the prior") {
  ctrl::DialogEnvironment env(domains::dialog_paper_small(),
                              {"regular", "r0", "alice"}, "morning", 13);
  auto trace = ctrl::run_episode(env, cfg_for("reasoning-only", 13));
  REQUIRE(trace.steps.size() == 1);
  CHECK(trace.steps[0].action_name.rfind("deliver_", 0) == 0);
  CHECK(trace.qa_cost == 0.0);
  CHECK(trace.reached_terminal);
}

TEST_CASE("step limit marks the trace truncated") {
  ctrl::DialogEnvironment env(domains::dialog_paper_small(),
                              {"regular", "r0", "alice"}, "morning", 5);
  auto cfg = cfg_for("Defined-3", 5);
  cfg.defined_rounds = 50;
  cfg.step_limit = 6;
  auto trace = ctrl::run_episode(env, cfg);
  CHECK(trace.truncated);
  CHECK_FALSE(trace.reached_terminal);
  CHECK(trace.step_count == 6);
}

namespace {

// Environment returning a probability-zero answer on its first step so the
// recovery path (reset to the model prior) gets exercised.
class RiggedEnvironment : public ctrl::Environment {
 public:
  RiggedEnvironment() {
    m_.pomdp = true;
    m_.n_states = 2;
    m_.n_actions = 1;
    m_.n_obs = 2;
    m_.state_names = {"wait", "done"};
    m_.action_names = {"poke"};
    m_.obs_names = {"beep", "silence"};
    m_.trans = {0.5, 0.5, 0.0, 1.0};
    m_.reward = {0.0, 0.0};
    m_.obs = {1.0, 0.0, 1.0, 0.0};  // silence never happens per the model
    m_.terminal = {0, 1};
    m_.prior = {1.0, 0.0};
    m_.gamma = 0.9;
  }
  std::string name() const override { return "rigged"; }
  std::string kind() const override { return "pomdp"; }
  std::vector<std::string> sense() override { return {}; }
  ctrl::BuiltModel build(const ctrl::StrategySpec&,
                         const std::vector<std::string>&) override {
    ctrl::BuiltModel b;
    b.m = m_;
    b.fingerprint = m_.fingerprint();
    b.model_id = "rigged";
    return b;
  }
  bool consistent(const ctrl::BuiltModel&,
                  const std::vector<std::string>&) override {
    return true;
  }
  int true_state(const ctrl::BuiltModel&) const override { return -1; }
  bool terminal() const override { return steps_ >= 2; }
  ctrl::StepOutcome step(const ctrl::BuiltModel&, int) override {
    ++steps_;
    if (steps_ == 1) return {0.0, 1, false};  // the impossible "silence"
    return {0.0, 0, true};
  }

 private:
  model::DecisionModel m_;
  int steps_ = 0;
};

}  // namespace

TEST_CASE("impossible observation resets the belief and is logged") {
  RiggedEnvironment env;
  auto trace = ctrl::run_episode(env, cfg_for("CORPP", 1));
  REQUIRE(trace.steps.size() == 2);
  CHECK(trace.steps[0].belief_reset);
  CHECK_FALSE(trace.steps[1].belief_reset);
}

TEST_CASE("scripted strategies refuse domains without question structure") {
  ctrl::NavEnvironment env(calm_nav(), "morning", "sunny", {}, 1);
  CHECK_THROWS_WITH_AS(
      (void)ctrl::run_episode(env, cfg_for("Defined-1", 1)),
      doctest::Contains("is not defined for the navigation domain"),
      std::runtime_error);
}

TEST_CASE("trace serialization: versioned records, one summary line") {
  std::vector<ctrl::NavEvent> events;
  ctrl::NavEvent ev;
  ev.after_actions = 1;
  ev.set_weather = "cloudy";
  events.push_back(ev);
  ctrl::NavEnvironment env(calm_nav(), "morning", "sunny", events, 5);
  auto trace = ctrl::run_episode(env, cfg_for("iCORPP", 5));

  std::istringstream in(dump(trace));
  std::string line;
  int steps = 0, replans = 0, summaries = 0;
  while (std::getline(in, line)) {
    auto j = nlohmann::json::parse(line);
    CHECK(j["schema"] == "kbplan-trace/1");
    std::string type = j["type"];
    if (type == "step") {
      ++steps;
      CHECK(j.contains("action_name"));
      CHECK(j.contains("reward"));
      CHECK(j.contains("sensed"));
    } else if (type == "replan") {
      ++replans;
      CHECK(j.contains("violating_fact"));
    } else {
      CHECK(type == "summary");
      ++summaries;
      CHECK(j["strategy"] == "iCORPP");
      CHECK(j["replans"] == trace.replans.size());
    }
  }
  CHECK(steps == static_cast<int>(trace.steps.size()));
  CHECK(replans == static_cast<int>(trace.replans.size()));
  CHECK(summaries == 1);
}
