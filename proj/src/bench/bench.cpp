#include "kbplan/bench/bench.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <random>
#include <stdexcept>

#include "kbplan/plan/plan.hpp"

namespace kbplan::bench {

namespace {

uint64_t mix64(uint64_t a, uint64_t b) {
  uint64_t x = a + 0x9e3779b97f4a7c15ull * (b + 1);
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ull;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebull;
  x ^= x >> 31;
  return x;
}

double canon(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

int sample_cum(const std::vector<double>& cum, std::mt19937_64& rng) {
  double u = canon(rng) * cum.back();
  for (size_t k = 0; k < cum.size(); ++k)
    if (u < cum[k]) return static_cast<int>(k);
  return static_cast<int>(cum.size()) - 1;
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// The hidden-request distribution of a scenario: the truth model's prior at
// the actual time of day.
struct TruthSampler {
  std::vector<domains::RequestTriple> requests;
  std::vector<double> cum;

  domains::RequestTriple sample(std::mt19937_64& rng) const {
    return requests[sample_cum(cum, rng)];
  }
};

TruthSampler make_truth_sampler(const DialogScenario& sc) {
  std::vector<std::string> sensed;
  if (!sc.truth_time.empty()) sensed.push_back("curr_time = " + sc.truth_time);
  auto parts = domains::build_dialog_model(sc.cfg, sensed);
  TruthSampler ts;
  ts.requests = parts.requests;
  double run = 0.0;
  for (size_t s = 0; s < ts.requests.size(); ++s) {
    run += parts.m.prior[s];
    ts.cum.push_back(run);
  }
  if (ts.cum.empty() || ts.cum.back() <= 0.0)
    throw std::runtime_error("scenario '" + sc.name +
                             "' admits no requestable state");
  return ts;
}

CellStats aggregate(const std::string& strategy, const std::string& condition,
                    const std::vector<TrialRow>& rows) {
  CellStats c;
  c.strategy = strategy;
  c.condition = condition;
  c.trials = static_cast<int>(rows.size());
  if (rows.empty()) return c;
  double n = static_cast<double>(rows.size());
  double sc = 0, sr = 0, ss = 0, sp = 0;
  long wins = 0;
  for (const auto& r : rows) {
    sc += r.qa_cost;
    sr += r.reward;
    ss += r.steps;
    sp += r.replans;
    wins += r.success ? 1 : 0;
  }
  c.accuracy = wins / n;
  c.mean_cost = sc / n;
  c.mean_reward = sr / n;
  c.mean_steps = ss / n;
  c.mean_replans = sp / n;
  if (rows.size() > 1) {
    double vc = 0, vr = 0;
    for (const auto& r : rows) {
      vc += (r.qa_cost - c.mean_cost) * (r.qa_cost - c.mean_cost);
      vr += (r.reward - c.mean_reward) * (r.reward - c.mean_reward);
    }
    c.se_cost = std::sqrt(vc / (n - 1.0) / n);
    c.se_reward = std::sqrt(vr / (n - 1.0) / n);
  }
  return c;
}

ctrl::ControllerConfig trial_config(const ctrl::StrategySpec& spec,
                                    uint64_t seed, const BenchOptions& opt,
                                    std::shared_ptr<ctrl::PolicyCache> cache) {
  ctrl::ControllerConfig cc;
  cc.strategy = spec;
  cc.defined_rounds = opt.defined_rounds;
  cc.step_limit = opt.step_limit;
  cc.seed = seed;
  cc.belief_budget = opt.belief_budget;
  cc.solve_sweeps = opt.solve_sweeps;
  cc.cache = std::move(cache);
  return cc;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

Condition parse_condition(const std::string& name) {
  std::string n = lower(name);
  if (n == "all") return Condition::all;
  if (n == "limited") return Condition::limited;
  if (n == "inaccurate") return Condition::inaccurate;
  throw std::invalid_argument("unknown knowledge condition '" + name + "'");
}

std::string condition_name(Condition c) {
  switch (c) {
    case Condition::all: return "All";
    case Condition::limited: return "Limited";
    default: return "Inaccurate";
  }
}

std::string reported_time(Condition c, const std::string& truth,
                          const std::vector<std::string>& times) {
  switch (c) {
    case Condition::all:
      return truth;
    case Condition::limited:
      return "";
    default: {
      auto it = std::find(times.begin(), times.end(), truth);
      if (it == times.end() || times.size() < 2)
        throw std::invalid_argument(
            "cannot misreport '" + truth +
            "': the time sort needs it plus an alternative");
      size_t k = static_cast<size_t>(it - times.begin());
      return times[(k + 1) % times.size()];
    }
  }
}

DialogScenario dialog_scenario(const std::string& name) {
  DialogScenario sc;
  sc.name = name;
  if (name == "dialog-paper-small") {
    sc.cfg = domains::dialog_paper_small();
  } else if (name == "dialog-paper-full") {
    sc.cfg = domains::dialog_paper_full();
    sc.cfg.unavailable = {"soda", "sandwich"};
  } else if (name == "dialog-tuning") {
    sc.cfg = domains::dialog_tuning();
  } else {
    throw std::invalid_argument("unknown dialog scenario '" + name + "'");
  }
  // Benchmarks never assume an unsensed time; they marginalise instead.
  sc.cfg.default_time.clear();
  return sc;
}

NavScenario nav_scenario(const std::string& name) {
  if (name != "nav-walker-relocation")
    throw std::invalid_argument("unknown navigation scenario '" + name + "'");
  NavScenario sc;
  sc.name = name;
  // The walker starts parked in a corner nobody visits, then jumps onto the
  // shaded row-2 crossing, where it shuffles between the two cells every
  // ten steps.
  sc.cfg.walker_path = {{4, 5}};
  sc.cfg.walker_period = 10;
  ctrl::NavEvent ev;
  ev.after_actions = 2;
  ev.relocate_walker = {{2, 1}, {3, 1}};
  sc.events = {ev};
  return sc;
}

BenchResult run_benchmark(const DialogScenario& scenario,
                          const std::vector<std::string>& strategies,
                          const std::vector<Condition>& conditions, int trials,
                          uint64_t seed, const BenchOptions& opt) {
  if (trials < 1) throw std::invalid_argument("trials must be at least 1");
  if (strategies.empty() || conditions.empty())
    throw std::invalid_argument("need at least one strategy and one condition");
  std::vector<ctrl::StrategySpec> specs;
  for (const auto& s : strategies) specs.push_back(ctrl::parse_strategy(s));

  TruthSampler sampler = make_truth_sampler(scenario);
  std::vector<uint64_t> tseed(trials);
  std::vector<domains::RequestTriple> truth(trials);
  for (int t = 0; t < trials; ++t) {
    tseed[t] = mix64(seed, static_cast<uint64_t>(t));
    std::mt19937_64 rng(tseed[t]);
    truth[t] = sampler.sample(rng);
  }

  auto cache = std::make_shared<ctrl::PolicyCache>();
  BenchResult out;
  for (const auto& spec : specs) {
    for (Condition cond : conditions) {
      std::string told =
          reported_time(cond, scenario.truth_time, scenario.cfg.times);
      std::vector<TrialRow> rows(trials);
      std::string first_error;
#pragma omp parallel for schedule(dynamic)
      for (int t = 0; t < trials; ++t) {
        try {
          ctrl::DialogEnvironment env(scenario.cfg, truth[t], told, tseed[t]);
          auto tr = ctrl::run_episode(env,
                                      trial_config(spec, tseed[t], opt, cache));
          TrialRow& row = rows[t];
          row.strategy = ctrl::strategy_name(spec);
          row.condition = condition_name(cond);
          row.trial = t;
          row.seed = tseed[t];
          row.steps = tr.step_count;
          row.replans = static_cast<int>(tr.replans.size());
          row.qa_cost = tr.qa_cost;
          row.reward = tr.cumulative_reward;
          row.success = tr.success;
        } catch (const std::exception& e) {
#pragma omp critical
          if (first_error.empty()) first_error = e.what();
        }
      }
      if (!first_error.empty()) throw std::runtime_error(first_error);
      out.cells.push_back(aggregate(ctrl::strategy_name(spec),
                                    condition_name(cond), rows));
      out.rows.insert(out.rows.end(), rows.begin(), rows.end());
    }
  }
  return out;
}

BenchResult run_nav_benchmark(const NavScenario& scenario,
                              const std::vector<std::string>& strategies,
                              int episodes, uint64_t seed,
                              const BenchOptions& opt) {
  if (episodes < 1) throw std::invalid_argument("episodes must be at least 1");
  std::vector<ctrl::StrategySpec> specs;
  for (const auto& s : strategies) specs.push_back(ctrl::parse_strategy(s));

  auto cache = std::make_shared<ctrl::PolicyCache>();
  BenchResult out;
  for (const auto& spec : specs) {
    std::vector<TrialRow> rows(episodes);
    std::string first_error;
#pragma omp parallel for schedule(dynamic)
    for (int t = 0; t < episodes; ++t) {
      try {
        uint64_t s = mix64(seed, static_cast<uint64_t>(t));
        ctrl::NavEnvironment env(scenario.cfg, scenario.truth_time,
                                 scenario.truth_weather, scenario.events, s);
        auto tr = ctrl::run_episode(env, trial_config(spec, s, opt, cache));
        TrialRow& row = rows[t];
        row.strategy = ctrl::strategy_name(spec);
        row.condition = "All";
        row.trial = t;
        row.seed = s;
        row.steps = tr.step_count;
        row.replans = static_cast<int>(tr.replans.size());
        row.qa_cost = tr.qa_cost;
        row.reward = tr.cumulative_reward;
        row.success = tr.success;
      } catch (const std::exception& e) {
#pragma omp critical
        if (first_error.empty()) first_error = e.what();
      }
    }
    if (!first_error.empty()) throw std::runtime_error(first_error);
    out.cells.push_back(
        aggregate(ctrl::strategy_name(spec), "All", rows));
    out.rows.insert(out.rows.end(), rows.begin(), rows.end());
  }
  return out;
}

ctrl::EpisodeTrace defined_policy_run(int kind, int rounds,
                                      const DialogScenario& scenario,
                                      uint64_t seed, const BenchOptions& opt) {
  if (kind < 1 || kind > 3)
    throw std::invalid_argument("defined policy kind must be 1, 2 or 3");
  if (rounds < 1) throw std::invalid_argument("rounds must be at least 1");
  TruthSampler sampler = make_truth_sampler(scenario);
  std::mt19937_64 rng(mix64(seed, 0));
  domains::RequestTriple truth = sampler.sample(rng);

  ctrl::StrategySpec spec;
  spec.strategy = ctrl::Strategy::defined_k;
  spec.defined_kind = kind;
  BenchOptions o = opt;
  o.defined_rounds = rounds;
  ctrl::DialogEnvironment env(scenario.cfg, truth, scenario.truth_time, seed);
  return ctrl::run_episode(env, trial_config(spec, seed, o, nullptr));
}

void write_csv(std::ostream& out, const BenchResult& r) {
  out << "# kbplan-bench/1\n";
  out << "strategy,condition,trial,seed,steps,replans,qa_cost,reward,success\n";
  for (const auto& row : r.rows)
    out << row.strategy << ',' << row.condition << ',' << row.trial << ','
        << row.seed << ',' << row.steps << ',' << row.replans << ','
        << fmt(row.qa_cost) << ',' << fmt(row.reward) << ','
        << (row.success ? 1 : 0) << '\n';
  out << "# aggregates\n";
  out << "strategy,condition,trials,accuracy,mean_cost,se_cost,mean_reward,"
         "se_reward,mean_steps,mean_replans\n";
  for (const auto& c : r.cells)
    out << c.strategy << ',' << c.condition << ',' << c.trials << ','
        << fmt(c.accuracy) << ',' << fmt(c.mean_cost) << ',' << fmt(c.se_cost)
        << ',' << fmt(c.mean_reward) << ',' << fmt(c.se_reward) << ','
        << fmt(c.mean_steps) << ',' << fmt(c.mean_replans) << '\n';
}

TuningCounts run_tuning_study(const domains::DialogConfig& cfg, long trials,
                              uint64_t seed, const BenchOptions& opt) {
  if (trials < 1) throw std::invalid_argument("trials must be at least 1");
  auto parts = domains::build_dialog_model(cfg, {});
  const int live = static_cast<int>(parts.requests.size());

  // A uniform prior and uniformly drawn truths keep every category equally
  // exposed; only the reward table can introduce asymmetry.
  for (int s = 0; s < parts.m.n_states; ++s)
    parts.m.prior[s] = parts.m.terminal[s] ? 0.0 : 1.0 / live;
  auto policy = plan::pbvi_solve(parts.m, parts.m.gamma, opt.belief_budget,
                                 opt.solve_sweeps, parts.m.fingerprint());

  TuningCounts tc;
  tc.items = parts.items;
  tc.rooms = parts.rooms;
  tc.truth_item.assign(tc.items.size(), 0);
  tc.truth_room.assign(tc.rooms.size(), 0);
  tc.delivered_item.assign(tc.items.size(), 0);
  tc.delivered_room.assign(tc.rooms.size(), 0);
  tc.trials = trials;

  auto index_of = [](const std::vector<std::string>& v, const std::string& x) {
    return static_cast<int>(std::find(v.begin(), v.end(), x) - v.begin());
  };

  std::mt19937_64 rng(mix64(seed, 1));
  for (long t = 0; t < trials; ++t) {
    int strue = static_cast<int>(canon(rng) * live);
    if (strue >= live) strue = live - 1;
    tc.truth_item[index_of(tc.items, parts.requests[strue].item)]++;
    tc.truth_room[index_of(tc.rooms, parts.requests[strue].room)]++;

    plan::Belief belief = parts.m.prior;
    int del = -1;
    for (int step = 0; step < opt.step_limit; ++step) {
      int a = policy.greedy(belief);
      if (a >= parts.n_questions) {
        del = a - parts.n_questions;
        break;
      }
      double u = canon(rng);
      int z = parts.m.n_obs - 1;
      double cum = 0.0;
      for (int k = 0; k < parts.m.n_obs; ++k) {
        cum += parts.m.o(strue, a, k);
        if (u < cum) {
          z = k;
          break;
        }
      }
      try {
        belief = plan::belief_update(parts.m, belief, a, z);
      } catch (const plan::ImpossibleObservation&) {
        belief = parts.m.prior;
      }
    }
    if (del < 0) {
      // Step budget exhausted: commit to the current argmax.
      del = 0;
      for (int s = 1; s < live; ++s)
        if (belief[s] > belief[del]) del = s;
    }
    if (del != strue) {
      ++tc.mistakes;
      // A bar counts deliveries of that category when a *different* category
      // was requested, per coordinate: delivering the right item to the
      // wrong room is a room mistake only.
      if (parts.requests[del].item != parts.requests[strue].item)
        tc.delivered_item[index_of(tc.items, parts.requests[del].item)]++;
      if (parts.requests[del].room != parts.requests[strue].room)
        tc.delivered_room[index_of(tc.rooms, parts.requests[del].room)]++;
    }
  }
  return tc;
}

std::vector<PolicyMapRow> policy_map(const domains::DialogConfig& cfg,
                                     int resolution, const BenchOptions& opt) {
  if (resolution < 2)
    throw std::invalid_argument("resolution must be at least 2");

  // Collapse the item and person dimensions to point masses so the belief
  // lives on the room simplex alone.
  domains::DialogConfig c = cfg;
  c.unavailable.clear();
  if (c.items.empty()) c.items = c.ontology.leaves();
  c.items = {c.items.front()};
  for (const auto& p : c.persons)
    if (p.prof ? p.paid : p.registered) {
      c.persons = {p};
      break;
    }
  if (c.rooms.size() != 3)
    throw std::invalid_argument("the room-belief map needs exactly 3 rooms");

  auto parts = domains::build_dialog_model(c, {});
  const int live = static_cast<int>(parts.requests.size());
  if (live != 3)
    throw std::runtime_error("room restriction failed to yield 3 states");
  for (int s = 0; s < parts.m.n_states; ++s)
    parts.m.prior[s] = parts.m.terminal[s] ? 0.0 : 1.0 / live;
  auto policy = plan::pbvi_solve(parts.m, parts.m.gamma, opt.belief_budget,
                                 opt.solve_sweeps, parts.m.fingerprint());

  // State order is canonical, rooms ascending; b0..b2 follow it.
  std::vector<PolicyMapRow> rows;
  for (int i = 0; i <= resolution; ++i)
    for (int j = 0; j + i <= resolution; ++j) {
      PolicyMapRow r;
      r.b0 = static_cast<double>(i) / resolution;
      r.b1 = static_cast<double>(j) / resolution;
      r.b2 = 1.0 - r.b0 - r.b1;
      if (r.b2 < 0.0) r.b2 = 0.0;
      plan::Belief b(parts.m.n_states, 0.0);
      b[0] = r.b0;
      b[1] = r.b1;
      b[2] = r.b2;
      r.action = parts.m.action_names[policy.greedy(b)];
      rows.push_back(std::move(r));
    }
  return rows;
}

void write_policy_map_csv(std::ostream& out,
                          const std::vector<PolicyMapRow>& rows) {
  out << "b_r0,b_r1,b_r2,action\n";
  for (const auto& r : rows)
    out << fmt(r.b0) << ',' << fmt(r.b1) << ',' << fmt(r.b2) << ','
        << r.action << '\n';
}

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::string question_prompt(const domains::DialogModelParts& parts,
                            const std::string& action) {
  if (action == "ask_item") return "Which item should I deliver?";
  if (action == "ask_room") return "Which room is this delivery to?";
  if (action == "ask_person") return "Who is this delivery for?";
  std::string v = action.substr(std::string("confirm_").size());
  auto in = [&](const std::vector<std::string>& vals) {
    return std::find(vals.begin(), vals.end(), v) != vals.end();
  };
  if (in(parts.items)) return "Should I deliver " + v + "?";
  if (in(parts.rooms)) return "Is this delivery to " + v + "?";
  return "Is this delivery for " + v + "?";
}

void show_belief(std::ostream& out, const domains::DialogModelParts& parts,
                 const plan::Belief& b, int top_k) {
  std::vector<int> order;
  for (size_t s = 0; s < parts.requests.size(); ++s)
    order.push_back(static_cast<int>(s));
  std::stable_sort(order.begin(), order.end(),
                   [&](int x, int y) { return b[x] > b[y]; });
  int shown = std::min<int>(top_k, static_cast<int>(order.size()));
  for (int k = 0; k < shown; ++k) {
    const auto& rq = parts.requests[order[k]];
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", b[order[k]]);
    out << "  " << buf << "  " << rq.item << " to " << rq.room << " for "
        << rq.person << "\n";
  }
}

}  // namespace

ReplResult run_dialog_session(std::istream& in, std::ostream& out,
                              const ReplOptions& opt) {
  std::vector<std::string> sensed;
  if (!opt.sensed_time.empty())
    sensed.push_back("curr_time = " + opt.sensed_time);
  auto parts = domains::build_dialog_model(opt.cfg, sensed);
  const int live = static_cast<int>(parts.requests.size());
  if (opt.uniform_prior)
    for (int s = 0; s < parts.m.n_states; ++s)
      parts.m.prior[s] = parts.m.terminal[s] ? 0.0 : 1.0 / live;
  auto policy = plan::pbvi_solve(parts.m, parts.m.gamma, opt.belief_budget,
                                 opt.solve_sweeps, parts.m.fingerprint());

  ReplResult res;
  plan::Belief belief = parts.m.prior;
  out << "Tracking " << live << " possible requests ("
      << (opt.uniform_prior ? "uniform" : "reasoned") << " prior):\n";
  show_belief(out, parts, belief, opt.top_k);

  while (res.turns < opt.max_turns) {
    int a = policy.greedy(belief);
    const std::string& name = parts.m.action_names[a];
    if (name.rfind("deliver_", 0) == 0) {
      int s = a - parts.n_questions;
      const auto& rq = parts.requests[s];
      out << "Delivering " << rq.item << " to " << rq.room << " for "
          << rq.person << ".\n";
      res.delivery = name;
      res.completed = true;
      break;
    }

    out << question_prompt(parts, name) << "\n";
    int z = -1;
    while (z < 0) {
      out << "> " << std::flush;
      std::string line;
      if (!std::getline(in, line)) {
        out << "(no more input)\n";
        return res;
      }
      std::string ans = lower(trim(line));
      auto it = std::find(parts.observations.begin(), parts.observations.end(),
                          ans);
      if (it != parts.observations.end()) {
        z = static_cast<int>(it - parts.observations.begin());
      } else {
        out << "Please answer with one of: ";
        for (size_t k = 0; k < parts.observations.size(); ++k)
          out << (k ? ", " : "") << parts.observations[k];
        out << "\n";
      }
    }
    ++res.turns;
    try {
      belief = plan::belief_update(parts.m, belief, a, z);
    } catch (const plan::ImpossibleObservation&) {
      out << "That answer contradicts everything I believed; starting over.\n";
      belief = parts.m.prior;
    }
    show_belief(out, parts, belief, opt.top_k);
  }
  return res;
}

}  // namespace kbplan::bench
