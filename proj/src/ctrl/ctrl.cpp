#include "kbplan/ctrl/ctrl.hpp"

#include <algorithm>
#include <cctype>
#include <ostream>
#include <random>
#include <set>
#include <stdexcept>

#include "vendor/json.hpp"

namespace kbplan::ctrl {

namespace {

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

StrategySpec parse_strategy(const std::string& name) {
  std::string low = lower(name);
  if (low == "icorpp") return {Strategy::icorpp, 3};
  if (low == "corpp") return {Strategy::corpp, 3};
  if (low == "stationary") return {Strategy::stationary, 3};
  if (low == "lr+pp" || low == "lr-pp") return {Strategy::lr_pp, 3};
  if (low == "pp-only" || low == "pp only") return {Strategy::pp_only, 3};
  if (low == "reasoning-only" || low == "reasoning only")
    return {Strategy::reasoning_only, 3};
  if (low.rfind("defined-", 0) == 0 && low.size() == 9 && low[8] >= '1' &&
      low[8] <= '3')
    return {Strategy::defined_k, low[8] - '0'};
  throw std::invalid_argument("unknown strategy '" + name + "'");
}

std::string strategy_name(const StrategySpec& spec) {
  switch (spec.strategy) {
    case Strategy::icorpp: return "iCORPP";
    case Strategy::corpp: return "CORPP";
    case Strategy::stationary: return "stationary";
    case Strategy::lr_pp: return "LR+PP";
    case Strategy::pp_only: return "PP-only";
    case Strategy::defined_k:
      return "Defined-" + std::to_string(spec.defined_kind);
    case Strategy::reasoning_only: return "reasoning-only";
  }
  return "?";
}

std::optional<PolicyCache::Entry> PolicyCache::find(uint64_t fingerprint) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = map_.find(fingerprint);
  if (it == map_.end()) return std::nullopt;
  return it->second;
}

void PolicyCache::insert(Entry e) {
  std::lock_guard<std::mutex> lock(mu_);
  map_.emplace(e.fingerprint, std::move(e));
}

size_t PolicyCache::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return map_.size();
}

bool check_consistency(const model::DomainBundle& bundle,
                       const std::vector<std::string>& facts,
                       const model::StateSpace& worlds) {
  model::StateSpace now = model::log_reason(bundle, facts);
  return now.attrs == worlds.attrs && now.names == worlds.names;
}

namespace {

PolicyCache::Entry solve_or_fetch(const BuiltModel& built,
                                  const ControllerConfig& cfg) {
  if (cfg.cache) {
    auto hit = cfg.cache->find(built.fingerprint);
    if (hit) return *hit;
  }
  PolicyCache::Entry e;
  e.fingerprint = built.fingerprint;
  plan::SolveOptions opt;
  opt.max_iter = cfg.vi_max_iter;
  opt.parallel = cfg.parallel;
  if (built.m.pomdp)
    e.pomdp = plan::pbvi_solve(built.m, built.m.gamma, cfg.belief_budget,
                               cfg.solve_sweeps, built.fingerprint, opt);
  else
    e.mdp = plan::value_iteration(built.m, built.m.gamma, cfg.vi_eps, opt);
  if (cfg.cache) cfg.cache->insert(e);
  return e;
}

// Most probable deliverable state's delivery action.  Ties go to the lowest
// state index unless an rng is supplied (then uniformly among the tied).
int deliver_argmax(const QuestionPlan& qp, const plan::Belief& b,
                   std::mt19937_64* rng) {
  double best = -1.0;
  std::vector<int> tied;
  for (size_t s = 0; s < b.size(); ++s) {
    if (qp.deliver_for_state[s] < 0) continue;
    if (b[s] > best + 1e-12) {
      best = b[s];
      tied.assign(1, static_cast<int>(s));
    } else if (b[s] > best - 1e-12) {
      tied.push_back(static_cast<int>(s));
    }
  }
  if (tied.empty()) throw std::runtime_error("no deliverable state in the model");
  int s = tied.front();
  if (rng && tied.size() > 1)
    s = tied[static_cast<size_t>((*rng)() % tied.size())];
  return qp.deliver_for_state[s];
}

void diff_facts(const std::vector<std::string>& before,
                const std::vector<std::string>& after, ReplanEvent& ev) {
  std::set<std::string> b(before.begin(), before.end());
  std::set<std::string> a(after.begin(), after.end());
  for (const auto& f : a)
    if (!b.count(f)) ev.facts_added.push_back(f);
  for (const auto& f : b)
    if (!a.count(f)) ev.facts_removed.push_back(f);
  if (!ev.facts_added.empty())
    ev.violating_fact = ev.facts_added.front();
  else if (!ev.facts_removed.empty())
    ev.violating_fact = ev.facts_removed.front();
}

}  // namespace

EpisodeTrace run_episode(Environment& env, const ControllerConfig& cfg) {
  EpisodeTrace trace;
  trace.domain = env.name();
  trace.strategy = strategy_name(cfg.strategy);
  trace.seed = cfg.seed;

  const bool pomdp = env.kind() == "pomdp";
  const Strategy strat = cfg.strategy.strategy;
  const bool scripted =
      strat == Strategy::defined_k || strat == Strategy::reasoning_only;
  const bool replans =
      strat == Strategy::icorpp && cfg.replan_on_inconsistency;

  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);  // tie-breaks only

  auto facts = env.sense();
  int steps = 0;

  // Repeat sense-reason-plan until the episode actually ends.
  while (true) {
    BuiltModel built;
    try {
      built = env.build(cfg.strategy, facts);
    } catch (const std::exception& e) {
      throw std::runtime_error("episode " + trace.domain + "/" +
                               trace.strategy + " seed " +
                               std::to_string(cfg.seed) +
                               ": model build failed: " + e.what());
    }
    const auto facts_at_build = facts;
    trace.model_ids.push_back(built.model_id);

    PolicyCache::Entry policy;
    if (!scripted) {
      try {
        policy = solve_or_fetch(built, cfg);
      } catch (const std::exception& e) {
        throw std::runtime_error("episode " + trace.domain + "/" +
                                 trace.strategy + " seed " +
                                 std::to_string(cfg.seed) +
                                 ": solve failed: " + e.what());
      }
    }

    plan::Belief belief = built.m.prior;

    // Scripted strategies queue their question rounds up front.
    std::vector<int> queue;
    std::optional<QuestionPlan> qp;
    if (scripted) {
      qp = env.question_plan(built);
      if (!qp)
        throw std::invalid_argument(trace.strategy +
                                    " needs a question/delivery domain");
      if (strat == Strategy::defined_k) {
        for (int r = 0; r < cfg.defined_rounds; ++r) {
          if (cfg.strategy.defined_kind != 2)
            queue.insert(queue.end(), qp->wh_actions.begin(),
                         qp->wh_actions.end());
          if (cfg.strategy.defined_kind != 1)
            queue.insert(queue.end(), qp->confirm_actions.begin(),
                         qp->confirm_actions.end());
        }
      }
    }
    size_t queue_at = 0;

    bool want_replan = false;
    while (!env.terminal() && steps < cfg.step_limit) {
      if (replans && facts != facts_at_build &&
          !env.consistent(built, facts)) {
        ReplanEvent ev;
        ev.step = steps;
        diff_facts(facts_at_build, facts, ev);
        ev.note =
            "world set under the current facts differs from the active "
            "model's; fact flips that leave the world set unchanged do not "
            "replan";
        trace.replans.push_back(std::move(ev));
        want_replan = true;
        break;
      }

      int s = env.true_state(built);
      int a = -1;
      if (scripted) {
        a = queue_at < queue.size()
                ? queue[queue_at++]
                : deliver_argmax(*qp, belief,
                                 strat == Strategy::reasoning_only ? &rng
                                                                   : nullptr);
      } else if (pomdp) {
        a = policy.pomdp->greedy(belief);
      } else {
        if (s < 0)
          throw std::runtime_error(
              "episode " + trace.domain + "/" + trace.strategy + " seed " +
              std::to_string(cfg.seed) +
              ": current state is missing from the planning model");
        a = policy.mdp->action[s];
      }

      StepOutcome out = env.step(built, a);

      StepRecord rec;
      rec.step = steps;
      rec.model_id = built.model_id;
      rec.state = s;
      rec.action = a;
      rec.action_name = built.m.action_names[a];
      rec.reward = out.reward;
      rec.observation = out.observation;
      if (out.observation >= 0) rec.obs_name = built.m.obs_names[out.observation];
      trace.cumulative_reward += out.reward;

      if (pomdp && out.observation >= 0 && !out.terminated) {
        try {
          belief = plan::belief_update(built.m, belief, a, out.observation);
        } catch (const plan::ImpossibleObservation&) {
          belief = built.m.prior;
          rec.belief_reset = true;
        }
      }

      facts = env.sense();
      rec.sensed = facts;
      trace.steps.push_back(std::move(rec));
      ++steps;
    }

    if (!want_replan || steps >= cfg.step_limit) break;
  }

  trace.step_count = steps;
  trace.reached_terminal = env.terminal();
  trace.truncated = !trace.reached_terminal && steps >= cfg.step_limit;
  env.finish(trace);
  return trace;
}

void write_trace_jsonl(std::ostream& out, const EpisodeTrace& t) {
  using json = nlohmann::ordered_json;
  auto emit_replan = [&](const ReplanEvent& ev) {
    json j;
    j["schema"] = "kbplan-trace/1";
    j["type"] = "replan";
    j["step"] = ev.step;
    j["facts_added"] = ev.facts_added;
    j["facts_removed"] = ev.facts_removed;
    j["violating_fact"] = ev.violating_fact;
    j["note"] = ev.note;
    out << j.dump() << '\n';
  };

  size_t ri = 0;
  for (const auto& st : t.steps) {
    while (ri < t.replans.size() && t.replans[ri].step <= st.step)
      emit_replan(t.replans[ri++]);
    json j;
    j["schema"] = "kbplan-trace/1";
    j["type"] = "step";
    j["step"] = st.step;
    j["model"] = st.model_id;
    if (st.state >= 0) j["state"] = st.state;
    j["action"] = st.action;
    j["action_name"] = st.action_name;
    j["reward"] = st.reward;
    if (st.observation >= 0) {
      j["observation"] = st.observation;
      j["obs_name"] = st.obs_name;
    }
    if (st.belief_reset) j["belief_reset"] = true;
    j["sensed"] = st.sensed;
    out << j.dump() << '\n';
  }
  while (ri < t.replans.size()) emit_replan(t.replans[ri++]);

  json s;
  s["schema"] = "kbplan-trace/1";
  s["type"] = "summary";
  s["domain"] = t.domain;
  s["strategy"] = t.strategy;
  s["seed"] = t.seed;
  s["steps"] = t.step_count;
  s["models"] = t.model_ids;
  s["replans"] = t.replans.size();
  s["reached_terminal"] = t.reached_terminal;
  s["truncated"] = t.truncated;
  s["success"] = t.success;
  s["qa_cost"] = t.qa_cost;
  s["cumulative_reward"] = t.cumulative_reward;
  out << s.dump() << '\n';
}

}  // namespace kbplan::ctrl
