#include "kbplan/plog/engine.hpp"

#include <algorithm>
#include <cmath>

namespace kbplan::plog {

namespace {

struct EvalState {
  std::vector<int16_t> values;  // -1 = not derived / not chosen
  uint64_t assigned = 0;        // bits over random_order slots
  double factor = 1.0;
};

class Enumerator {
 public:
  Enumerator(const GroundProgram& gp, std::span<const Evidence> evidence) : gp_(gp) {
    // stratum boundaries over the stratum-sorted rule list
    stratum_begin_.assign(gp_.n_strata + 1, static_cast<int>(gp_.rules.size()));
    for (int i = static_cast<int>(gp_.rules.size()) - 1; i >= 0; --i)
      stratum_begin_[gp_.rules[i].stratum] = i;
    for (int s = gp_.n_strata - 1; s >= 0; --s)
      stratum_begin_[s] = std::min(stratum_begin_[s], stratum_begin_[s + 1]);

    do_value_.assign(gp_.n_insts(), -1);
    allowed_.assign(gp_.n_insts(), {});
    for (const auto& ev : evidence) {
      GroundProgram::GLit g = gp_.resolve(ev.lit);
      if (ev.kind == Evidence::Do) {
        if (g.naf || g.neq)
          throw EvalError("do-evidence must assign a definite value: " + to_string(ev.lit));
        if (!gp_.is_random(g.inst))
          throw EvalError("do-evidence on '" + gp_.insts[g.inst].label +
                          "', which has no random selection");
        if (do_value_[g.inst] >= 0 && do_value_[g.inst] != g.value)
          throw EvalError("contradictory do-evidence for '" + gp_.insts[g.inst].label + "'");
        do_value_[g.inst] = g.value;
        continue;
      }
      obs_.push_back(g);
      // sound pruning at the choice point: an observation naming a random
      // instance directly restricts which values are worth branching on
      if (gp_.is_random(g.inst)) {
        auto& mask = allowed_[g.inst];
        if (mask.empty()) mask.assign(gp_.insts[g.inst].n_values, 1);
        bool keep_only = (!g.naf && !g.neq) || (g.naf && g.neq);
        for (int v = 0; v < gp_.insts[g.inst].n_values; ++v)
          if (keep_only ? (v != g.value) : (v == g.value)) mask[v] = 0;
      }
    }
  }

  WorldDistribution run() {
    EvalState st;
    st.values.assign(gp_.n_insts(), -1);
    recurse(st, 0);
    if (out_.worlds.empty())
      throw EvalError("no possible world is consistent with the program and evidence");
    // canonical order, then normalize
    std::vector<int> idx(out_.worlds.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    std::sort(idx.begin(), idx.end(),
              [&](int a, int b) { return out_.worlds[a].values < out_.worlds[b].values; });
    WorldDistribution sorted;
    sorted.worlds.reserve(idx.size());
    sorted.probs.reserve(idx.size());
    for (int i : idx) {
      if (!sorted.worlds.empty() && sorted.worlds.back() == out_.worlds[i]) {
        sorted.probs.back() += out_.probs[i];
        continue;
      }
      sorted.worlds.push_back(std::move(out_.worlds[i]));
      sorted.probs.push_back(out_.probs[i]);
    }
    double total = 0.0;
    for (double p : sorted.probs) total += p;
    if (total <= 0.0) throw EvalError("total probability mass of the possible worlds is zero");
    for (double& p : sorted.probs) p /= total;
    return sorted;
  }

 private:
  bool settled(const EvalState& st, int inst) const {
    return (gp_.inst_support[inst] & ~st.assigned) == 0;
  }

  // Truth of a body literal under a partial state. naf and "-p" read the
  // closed lower strata; they only report true once every random input of
  // the instance has been decided.
  bool lit_holds(const EvalState& st, const GroundProgram::GLit& l) const {
    int v = st.values[l.inst];
    const bool boolean = gp_.insts[l.inst].is_boolean;
    if (l.naf) {
      if (!settled(st, l.inst)) return false;
      if (l.neq) return v == -1 || v == l.value;
      return v != l.value;
    }
    if (l.neq) {
      if (boolean && v == -1 && settled(st, l.inst)) v = 0;
      return v != -1 && v != l.value;
    }
    if (boolean && l.value == 0)  // "-p": derived false, or settled underivable
      return v == 0 || (v == -1 && settled(st, l.inst));
    return v == l.value;
  }

  bool body_holds(const EvalState& st, const std::vector<GroundProgram::GLit>& body) const {
    for (const auto& l : body)
      if (!lit_holds(st, l)) return false;
    return true;
  }

  // Truth against a completed world (booleans default to false).
  bool lit_holds_final(const EvalState& st, const GroundProgram::GLit& l) const {
    int v = st.values[l.inst];
    if (v == -1 && gp_.insts[l.inst].is_boolean) v = 0;
    bool base = l.neq ? (v != -1 && v != l.value) : (v == l.value);
    return l.naf ? !base : base;
  }

  // Stratified closure. Returns false on a derivation conflict (the branch
  // yields no world).
  bool closure(EvalState& st) const {
    for (int s = 0; s < gp_.n_strata; ++s) {
      bool changed = true;
      while (changed) {
        changed = false;
        for (int i = stratum_begin_[s]; i < stratum_begin_[s + 1]; ++i) {
          const auto& r = gp_.rules[i];
          int16_t& hv = st.values[r.head_inst];
          if (hv == r.head_value) continue;
          if (!body_holds(st, r.body)) continue;
          if (hv != -1) return false;  // two rules disagree: contradiction
          hv = static_cast<int16_t>(r.head_value);
          changed = true;
        }
      }
    }
    return true;
  }

  // A constraint body that already holds can never un-hold: prune early.
  bool constraints_ok(const EvalState& st) const {
    for (const auto& c : gp_.constraints)
      if (body_holds(st, c.body)) return false;
    return true;
  }

  void recurse(EvalState& st, int depth) {
    if (!closure(st)) return;
    if (!constraints_ok(st)) return;
    if (depth == static_cast<int>(gp_.random_order.size())) {
      finalize(st);
      return;
    }
    const int inst = gp_.random_order[depth];
    const uint64_t bit = 1ull << depth;

    if (do_value_[inst] >= 0) {  // intervention: pin, no probability factor
      if (st.values[inst] != -1 && st.values[inst] != do_value_[inst]) return;
      EvalState child = st;
      child.values[inst] = static_cast<int16_t>(do_value_[inst]);
      child.assigned |= bit;
      recurse(child, depth + 1);
      return;
    }
    if (st.values[inst] != -1) {  // preempted by a deterministic derivation
      EvalState child = st;
      child.assigned |= bit;
      recurse(child, depth + 1);
      return;
    }

    int active = -1;
    for (int si : gp_.sels_of[inst]) {
      if (!body_holds(st, gp_.randoms[si].condition)) continue;
      if (active >= 0)
        throw EvalError("more than one random selection is active for '" +
                        gp_.insts[inst].label + "'");
      active = si;
    }
    if (active < 0) {  // attribute is not random under this condition
      EvalState child = st;
      child.assigned |= bit;
      recurse(child, depth + 1);
      return;
    }

    // dynamic range: declared values whose qualifier holds right now
    std::vector<int> range;
    for (const auto& [v, qual] : gp_.randoms[active].range) {
      if (qual >= 0 && st.values[qual] != 1) continue;
      range.push_back(v);
    }
    if (range.empty()) return;

    // per-value masses from the applicable pr-atoms; the remainder is shared
    // uniformly by the values without one
    std::vector<double> mass(range.size(), -1.0);
    double declared = 0.0;
    int undeclared = static_cast<int>(range.size());
    for (int pi : gp_.prs_of[inst]) {
      const auto& pa = gp_.pratoms[pi];
      if (!body_holds(st, pa.condition)) continue;
      for (size_t k = 0; k < range.size(); ++k) {
        if (range[k] != pa.value) continue;
        if (mass[k] >= 0.0) {
          if (std::fabs(mass[k] - pa.prob) > kProbTol)
            throw EvalError("conflicting pr-atoms for '" + gp_.insts[inst].label + " = " +
                            gp_.value_name(inst, pa.value) + "'");
        } else {
          mass[k] = pa.prob;
          declared += pa.prob;
          --undeclared;
        }
      }
    }
    if (declared > 1.0 + kProbTol)
      throw EvalError("pr-atoms for '" + gp_.insts[inst].label + "' sum to " +
                      std::to_string(declared) + " > 1");
    double residual = undeclared > 0 ? std::max(0.0, 1.0 - declared) / undeclared : 0.0;

    const auto& mask = allowed_[inst];
    for (size_t k = 0; k < range.size(); ++k) {
      double m = mass[k] >= 0.0 ? mass[k] : residual;
      if (m <= 0.0) continue;
      if (!mask.empty() && !mask[range[k]]) continue;  // observation pruning
      EvalState child = st;
      child.values[inst] = static_cast<int16_t>(range[k]);
      child.assigned |= bit;
      child.factor *= m;
      recurse(child, depth + 1);
    }
  }

  void finalize(const EvalState& st) {
    for (const auto& c : gp_.constraints)
      if (body_holds(st, c.body)) return;
    for (const auto& g : obs_)
      if (!lit_holds_final(st, g)) return;
    PossibleWorld w;
    w.values.resize(gp_.n_insts());
    for (int i = 0; i < gp_.n_insts(); ++i) {
      int v = st.values[i];
      if (v == -1) {
        if (!gp_.insts[i].is_boolean)
          throw EvalError("attribute '" + gp_.insts[i].label +
                          "' has no value in a possible world");
        v = 0;
      }
      w.values[i] = static_cast<int16_t>(v);
    }
    out_.worlds.push_back(std::move(w));
    out_.probs.push_back(st.factor);
  }

  const GroundProgram& gp_;
  std::vector<int> stratum_begin_;
  std::vector<int> do_value_;
  std::vector<std::vector<uint8_t>> allowed_;
  std::vector<GroundProgram::GLit> obs_;
  WorldDistribution out_;
};

}  // namespace

WorldDistribution enumerate_worlds(const GroundProgram& gp, std::span<const Evidence> evidence) {
  return Enumerator(gp, evidence).run();
}

bool holds(const GroundProgram&, const PossibleWorld& w, const GroundProgram::GLit& lit) {
  int v = w.values[lit.inst];
  bool base = lit.neq ? (v != lit.value) : (v == lit.value);
  return lit.naf ? !base : base;
}

double query(const GroundProgram& gp, const Literal& target, std::span<const Evidence> evidence) {
  GroundProgram::GLit g = gp.resolve(target);
  WorldDistribution d = enumerate_worlds(gp, evidence);
  double p = 0.0;
  for (size_t i = 0; i < d.worlds.size(); ++i)
    if (holds(gp, d.worlds[i], g)) p += d.probs[i];
  return p;
}

double query_conj(const GroundProgram& gp, std::span<const Literal> targets,
                  std::span<const Evidence> evidence) {
  std::vector<GroundProgram::GLit> gs;
  gs.reserve(targets.size());
  for (const auto& t : targets) gs.push_back(gp.resolve(t));
  WorldDistribution d = enumerate_worlds(gp, evidence);
  double p = 0.0;
  for (size_t i = 0; i < d.worlds.size(); ++i) {
    bool all = true;
    for (const auto& g : gs)
      if (!holds(gp, d.worlds[i], g)) {
        all = false;
        break;
      }
    if (all) p += d.probs[i];
  }
  return p;
}

std::string world_to_string(const GroundProgram& gp, const PossibleWorld& w) {
  std::string s;
  for (int i = 0; i < gp.n_insts(); ++i) {
    const auto& ii = gp.insts[i];
    if (ii.is_boolean) {
      if (w.values[i] != 1) continue;
      if (!s.empty()) s += ", ";
      s += ii.label;
    } else {
      if (!s.empty()) s += ", ";
      s += ii.label + "=" + gp.value_name(i, w.values[i]);
    }
  }
  return s;
}

}  // namespace kbplan::plog
