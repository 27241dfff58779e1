#include "kbplan/model/build.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace kbplan::model {

namespace {

using plog::Evidence;
using plog::GroundProgram;
using plog::Literal;

std::string lit_text(const GroundProgram& gp, int inst, int value) {
  const auto& ii = gp.insts[inst];
  if (ii.is_boolean) return value ? ii.label : "-" + ii.label;
  return ii.label + " = " + gp.value_name(inst, value);
}

Literal lit_for(const GroundProgram& gp, int inst, int value) {
  return plog::parse_literal(lit_text(gp, inst, value));
}

std::vector<std::string> args_of(const GroundProgram& gp, int inst) {
  const auto& ii = gp.insts[inst];
  const auto& ai = gp.attrs[ii.attr];
  std::vector<std::string> out;
  for (size_t k = 0; k < ii.args.size(); ++k)
    out.push_back(gp.sorts[ai.arg_sorts[k]].objects[ii.args[k]]);
  return out;
}

std::vector<int> resolve_proj(const GroundProgram& gp,
                              const std::vector<std::string>& attrs,
                              std::vector<int>* attr_first = nullptr) {
  std::vector<int> out;
  if (attr_first) attr_first->assign(1, 0);
  for (const auto& name : attrs) {
    int a = gp.find_attr(name);
    if (a < 0)
      throw std::runtime_error("relevant attribute '" + name + "' is not declared");
    const auto& ai = gp.attrs[a];
    for (int i = 0; i < ai.n_inst; ++i) out.push_back(ai.first_inst + i);
    if (attr_first) attr_first->push_back(static_cast<int>(out.size()));
  }
  return out;
}

// Re-resolve the projection against another composition of the bundle and
// make sure the instance layout still lines up with the state space.
std::vector<int> proj_for(const GroundProgram& gp, const StateSpace& ss) {
  std::vector<int> af;
  auto out = resolve_proj(gp, ss.attrs, &af);
  if (af != ss.attr_first)
    throw std::runtime_error(
        "relevant-attribute layout differs between program compositions");
  return out;
}

std::string fmt(double v) {
  std::ostringstream o;
  o << v;
  return o.str();
}

// Self-loop remainder, zero-row error and the stochasticity guard shared by
// both transition builders.
void finish_row(Transitions& tr, int s, int a, double matched,
                const StateSpace& ss, const std::string& action,
                std::vector<std::string>& notes) {
  double rem = 1.0 - matched;
  if (rem > plog::kProbTol) {
    tr.at(s, a, s) += rem;
    notes.push_back("t(" + ss.names[s] + ", " + action + "): " + fmt(rem) +
                    " successor mass outside the state space moved to the self-loop");
  } else if (rem > 0) {
    tr.at(s, a, s) += rem;  // rounding dust
  }
  double sum = 0.0;
  for (int s2 = 0; s2 < tr.n_states; ++s2) sum += tr.at(s, a, s2);
  if (sum <= plog::kProbTol)
    throw plog::EvalError("transition row t(" + ss.names[s] + ", " + action +
                          ") has zero total mass");
  if (std::abs(sum - 1.0) > 1e-6) {
    for (int s2 = 0; s2 < tr.n_states; ++s2) tr.at(s, a, s2) /= sum;
    notes.push_back("t(" + ss.names[s] + ", " + action +
                    "): renormalised (row summed to " + fmt(sum) + ")");
  }
}

// Ground program plus resolved instance ids used by both dyn_reason paths.
struct DynSetup {
  GroundProgram gp;
  std::vector<int> pins;     // current-state projection instances
  std::vector<int> next_of;  // successor instance per pin, -1 = static
  int act_inst = -1;
  std::vector<int> act_val;
};

DynSetup dyn_setup(const DomainBundle& bundle,
                   const std::vector<std::string>& sensed, const StateSpace& ss) {
  const TaskSpec& task = bundle.task;
  DynSetup d{ground_with_facts(bundle.domain + "\n" + bundle.dynamics, task, sensed),
             {}, {}, -1, {}};
  d.pins = proj_for(d.gp, ss);
  d.next_of.assign(d.pins.size(), -1);
  for (size_t i = 0; i < d.pins.size(); ++i) {
    const auto& ii = d.gp.insts[d.pins[i]];
    const std::string& aname = d.gp.attrs[ii.attr].name;
    for (const auto& [curr, next] : task.state_vars) {
      if (curr != aname) continue;
      int ni = d.gp.find_inst(next, args_of(d.gp, d.pins[i]));
      if (ni < 0)
        throw std::runtime_error("successor attribute '" + next +
                                 "' has no instance matching " + ii.label);
      if (d.gp.attrs[d.gp.insts[ni].attr].range_sort != d.gp.attrs[ii.attr].range_sort)
        throw std::runtime_error("'" + curr + "' and '" + next +
                                 "' range over different sorts");
      d.next_of[i] = ni;
    }
  }
  d.act_inst = d.gp.find_inst(task.action_attr, {});
  if (d.act_inst < 0)
    throw std::runtime_error("action attribute '" + task.action_attr +
                             "' is not declared as a constant attribute");
  for (const auto& a : task.actions) {
    int v = d.gp.find_value(d.act_inst, a);
    if (v < 0)
      throw std::runtime_error("action '" + a + "' is not in the range of " +
                               task.action_attr);
    d.act_val.push_back(v);
  }
  return d;
}

std::vector<Evidence> row_evidence(const DynSetup& d, const StateSpace& ss, int s,
                                   int a) {
  std::vector<Evidence> ev;
  for (size_t i = 0; i < d.pins.size(); ++i)
    ev.push_back({Evidence::Obs, lit_for(d.gp, d.pins[i], ss.states[s][i])});
  ev.push_back({Evidence::Obs, lit_for(d.gp, d.act_inst, d.act_val[a])});
  return ev;
}

}  // namespace

std::string facts_fragment(const plog::Program& base, const TaskSpec& task,
                           const std::vector<std::string>& sensed) {
  std::set<std::string> mentioned;
  std::ostringstream out;
  for (const auto& s : sensed) {
    mentioned.insert(plog::parse_literal(s).atom.attr);
    out << s << ".\n";
  }
  for (const auto& ex : task.exogenous) {
    if (mentioned.count(ex)) continue;
    const plog::AttrDecl* decl = nullptr;
    for (const auto& d : base.attrs)
      if (d.name == ex) {
        decl = &d;
        break;
      }
    if (!decl)
      throw std::runtime_error("exogenous attribute '" + ex + "' is not declared");
    std::string args;
    for (size_t k = 0; k < decl->arg_sorts.size(); ++k)
      args += (k ? ", V" : "V") + std::to_string(k);
    if (!args.empty()) args = "(" + args + ")";
    auto dv = task.defaults.find(ex);
    if (dv != task.defaults.end()) {
      // One fact per instance; a sensed literal for the attribute replaces
      // the default for all of them.
      if (decl->range == "boolean")
        out << (dv->second == "true" ? "" : "-") << ex << args << ".\n";
      else
        out << ex << args << " = " << dv->second << ".\n";
      continue;
    }
    if (decl->range == "boolean") continue;  // unstated booleans are false
    bool has_sel = false;
    for (const auto& r : base.randoms) has_sel = has_sel || r.atom.attr == ex;
    // No fact, no default, no declared distribution: marginalise uniformly.
    if (!has_sel) out << "random(" << ex << args << ").\n";
  }
  return out.str();
}

plog::GroundProgram ground_with_facts(const std::string& base_text,
                                      const TaskSpec& task,
                                      const std::vector<std::string>& sensed) {
  plog::Program base = plog::parse_program(base_text);
  std::string frag = facts_fragment(base, task, sensed);
  return plog::ground(plog::parse_program(base_text + "\n" + frag));
}

StateSpace log_reason(const DomainBundle& bundle,
                      const std::vector<std::string>& sensed) {
  auto gp = ground_with_facts(bundle.domain, bundle.task, sensed);
  auto dist = plog::enumerate_worlds(gp);

  StateSpace ss;
  ss.attrs = bundle.task.relevant;
  ss.insts = resolve_proj(gp, ss.attrs, &ss.attr_first);

  std::vector<std::vector<int16_t>> proj;
  proj.reserve(dist.worlds.size());
  for (const auto& w : dist.worlds) {
    std::vector<int16_t> v(ss.insts.size());
    for (size_t i = 0; i < ss.insts.size(); ++i) v[i] = w.values[ss.insts[i]];
    proj.push_back(std::move(v));
  }
  std::sort(proj.begin(), proj.end());
  proj.erase(std::unique(proj.begin(), proj.end()), proj.end());
  ss.states = std::move(proj);
  if (ss.states.empty())
    throw plog::EvalError("logical reasoning produced no admissible states");

  for (const auto& st : ss.states) {
    std::string n;
    for (size_t i = 0; i < ss.insts.size(); ++i) {
      const auto& ii = gp.insts[ss.insts[i]];
      if (ii.is_boolean) {
        if (!st[i]) continue;
        if (!n.empty()) n += ",";
        n += ii.label;
      } else {
        if (!n.empty()) n += ",";
        n += ii.label + "=" + gp.value_name(ss.insts[i], st[i]);
      }
    }
    ss.names.push_back(n);
  }
  return ss;
}

PriorBelief prob_reason(const DomainBundle& bundle,
                        const std::vector<std::string>& sensed,
                        const StateSpace& ss) {
  auto gp = ground_with_facts(bundle.domain + "\n" + bundle.priors, bundle.task, sensed);
  auto pins = proj_for(gp, ss);
  auto dist = plog::enumerate_worlds(gp);

  PriorBelief bel(ss.size(), 0.0);
  for (size_t k = 0; k < dist.worlds.size(); ++k) {
    std::vector<int16_t> v(pins.size());
    for (size_t i = 0; i < pins.size(); ++i) v[i] = dist.worlds[k].values[pins[i]];
    int idx = ss.find(v);
    if (idx < 0)
      throw plog::EvalError("prior mass " + fmt(dist.probs[k]) +
                            " on a world outside the state space");
    bel[idx] += dist.probs[k];
  }
  double total = std::accumulate(bel.begin(), bel.end(), 0.0);
  if (total <= plog::kProbTol)
    throw plog::EvalError("prior belief has zero total mass");
  for (auto& x : bel) x /= total;
  return bel;
}

PriorBelief prob_reason_naive(const DomainBundle& bundle,
                              const std::vector<std::string>& sensed,
                              const StateSpace& ss) {
  auto gp = ground_with_facts(bundle.domain + "\n" + bundle.priors, bundle.task, sensed);
  auto pins = proj_for(gp, ss);

  PriorBelief bel(ss.size(), 0.0);
  for (int s = 0; s < ss.size(); ++s) {
    std::vector<Literal> conj;
    for (size_t i = 0; i < pins.size(); ++i)
      conj.push_back(lit_for(gp, pins[i], ss.states[s][i]));
    bel[s] = plog::query_conj(gp, conj);
  }
  double total = std::accumulate(bel.begin(), bel.end(), 0.0);
  if (total <= plog::kProbTol)
    throw plog::EvalError("prior belief has zero total mass");
  for (auto& x : bel) x /= total;
  return bel;
}

Transitions dyn_reason(const DomainBundle& bundle,
                       const std::vector<std::string>& sensed,
                       const StateSpace& ss) {
  DynSetup d = dyn_setup(bundle, sensed, ss);
  const int S = ss.size();
  const int A = static_cast<int>(bundle.task.actions.size());

  Transitions tr;
  tr.n_states = S;
  tr.n_actions = A;
  tr.t.assign(static_cast<size_t>(S) * A * S, 0.0);

  std::vector<std::vector<std::string>> row_notes(static_cast<size_t>(S) * A);
  std::exception_ptr err = nullptr;

#pragma omp parallel for schedule(dynamic)
  for (int sa = 0; sa < S * A; ++sa) {
    if (err) continue;
    try {
      int s = sa / A, a = sa % A;
      auto ev = row_evidence(d, ss, s, a);
      plog::WorldDistribution dist;
      try {
        dist = plog::enumerate_worlds(d.gp, ev);
      } catch (const plog::EvalError& e) {
        throw plog::EvalError("empty successor distribution for state '" +
                              ss.names[s] + "', action '" +
                              bundle.task.actions[a] + "': " + e.what());
      }
      double matched = 0.0;
      std::vector<int16_t> nv(d.pins.size());
      for (size_t k = 0; k < dist.worlds.size(); ++k) {
        for (size_t i = 0; i < d.pins.size(); ++i) {
          int inst = d.next_of[i] >= 0 ? d.next_of[i] : d.pins[i];
          nv[i] = dist.worlds[k].values[inst];
        }
        int s2 = ss.find(nv);
        if (s2 < 0) continue;  // remainder handled as a self-loop below
        tr.at(s, a, s2) += dist.probs[k];
        matched += dist.probs[k];
      }
      finish_row(tr, s, a, matched, ss, bundle.task.actions[a], row_notes[sa]);
    } catch (...) {
#pragma omp critical
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);

  for (auto& rn : row_notes)
    tr.notes.insert(tr.notes.end(), rn.begin(), rn.end());
  return tr;
}

Transitions dyn_reason_naive(const DomainBundle& bundle,
                             const std::vector<std::string>& sensed,
                             const StateSpace& ss,
                             const std::vector<std::pair<int, int>>& pairs) {
  DynSetup d = dyn_setup(bundle, sensed, ss);
  const int S = ss.size();
  const int A = static_cast<int>(bundle.task.actions.size());

  Transitions tr;
  tr.n_states = S;
  tr.n_actions = A;
  tr.t.assign(static_cast<size_t>(S) * A * S, 0.0);

  std::vector<std::pair<int, int>> rows = pairs;
  if (rows.empty())
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) rows.emplace_back(s, a);

  for (auto [s, a] : rows) {
    auto ev = row_evidence(d, ss, s, a);
    double matched = 0.0;
    for (int s2 = 0; s2 < S; ++s2) {
      std::vector<Literal> conj;
      for (size_t i = 0; i < d.pins.size(); ++i) {
        int inst = d.next_of[i] >= 0 ? d.next_of[i] : d.pins[i];
        conj.push_back(lit_for(d.gp, inst, ss.states[s2][i]));
      }
      double p;
      try {
        p = plog::query_conj(d.gp, conj, ev);
      } catch (const plog::EvalError& e) {
        throw plog::EvalError("empty successor distribution for state '" +
                              ss.names[s] + "', action '" +
                              bundle.task.actions[a] + "': " + e.what());
      }
      tr.at(s, a, s2) += p;
      matched += p;
    }
    finish_row(tr, s, a, matched, ss, bundle.task.actions[a], tr.notes);
  }
  return tr;
}

DecisionModel assemble_model(const TaskSpec& task, const StateSpace& ss,
                             const Transitions& tr,
                             const std::vector<double>& reward,
                             const std::vector<uint8_t>& terminal,
                             const std::vector<std::string>& obs_names,
                             const std::vector<double>& obs, PriorBelief prior) {
  const int S = ss.size();
  const int A = static_cast<int>(task.actions.size());
  if (tr.n_states != S || tr.n_actions != A)
    throw std::runtime_error("transition table shape mismatch");
  if (reward.size() != static_cast<size_t>(S) * A)
    throw std::runtime_error("reward table shape mismatch");
  if (terminal.size() != static_cast<size_t>(S))
    throw std::runtime_error("terminal flag vector shape mismatch");

  DecisionModel m;
  m.pomdp = !obs_names.empty();
  m.n_states = S;
  m.n_actions = A;
  m.n_obs = static_cast<int>(obs_names.size());
  m.state_names = ss.names;
  m.action_names = task.actions;
  m.obs_names = obs_names;
  m.trans = tr.t;
  m.reward = reward;
  m.obs = obs;
  m.terminal = terminal;
  m.gamma = task.gamma;

  for (int s = 0; s < S; ++s) {
    if (!terminal[s]) continue;
    for (int a = 0; a < A; ++a) {
      for (int s2 = 0; s2 < S; ++s2)
        m.trans[(static_cast<size_t>(s) * A + a) * S + s2] = s2 == s ? 1.0 : 0.0;
      m.reward[static_cast<size_t>(s) * A + a] = 0.0;
    }
  }

  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) {
      double sum = 0.0;
      for (int s2 = 0; s2 < S; ++s2) {
        double p = m.t(s, a, s2);
        if (p < -plog::kProbTol)
          throw plog::EvalError("negative transition probability at t(" +
                                ss.names[s] + ", " + task.actions[a] + ")");
        sum += p;
      }
      if (std::abs(sum - 1.0) > plog::kProbTol)
        throw plog::EvalError("transition row t(" + ss.names[s] + ", " +
                              task.actions[a] + ") sums to " + fmt(sum));
      if (!std::isfinite(m.r(s, a)))
        throw plog::EvalError("reward r(" + ss.names[s] + ", " +
                              task.actions[a] + ") is not finite");
    }

  if (m.pomdp) {
    if (obs.size() != static_cast<size_t>(S) * A * m.n_obs)
      throw std::runtime_error("observation table shape mismatch");
    for (int s2 = 0; s2 < S; ++s2)
      for (int a = 0; a < A; ++a) {
        double sum = 0.0;
        for (int z = 0; z < m.n_obs; ++z) {
          double p = m.o(s2, a, z);
          if (p < -plog::kProbTol)
            throw plog::EvalError("negative observation probability at o(" +
                                  ss.names[s2] + ", " + task.actions[a] + ")");
          sum += p;
        }
        if (std::abs(sum - 1.0) > plog::kProbTol)
          throw plog::EvalError("observation row o(" + ss.names[s2] + ", " +
                                task.actions[a] + ") sums to " + fmt(sum));
      }
    if (prior.size() != static_cast<size_t>(S))
      throw std::runtime_error("a partially observable model needs a prior belief");
  }
  if (!prior.empty()) {
    double sum = std::accumulate(prior.begin(), prior.end(), 0.0);
    if (std::abs(sum - 1.0) > plog::kProbTol)
      throw plog::EvalError("prior belief sums to " + fmt(sum));
  }
  m.prior = std::move(prior);
  return m;
}

std::vector<plog::Literal> state_conjunction(const plog::GroundProgram& gp,
                                             const StateSpace& ss, int s) {
  auto pins = proj_for(gp, ss);
  std::vector<Literal> out;
  for (size_t i = 0; i < pins.size(); ++i)
    out.push_back(lit_for(gp, pins[i], ss.states[s][i]));
  return out;
}

long double naive_assignment_count(const plog::GroundProgram& gp,
                                   const TaskSpec& task) {
  long double n = 1.0L;
  auto mul = [&](const std::string& name) {
    int a = gp.find_attr(name);
    if (a < 0)
      throw std::runtime_error("attribute '" + name + "' is not declared");
    const auto& ai = gp.attrs[a];
    for (int i = 0; i < ai.n_inst; ++i) n *= gp.insts[ai.first_inst + i].n_values;
  };
  for (const auto& e : task.endogenous) mul(e);
  for (const auto& e : task.exogenous) mul(e);
  return n;
}

}  // namespace kbplan::model
