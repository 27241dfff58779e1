#pragma once

// Reference machinery for checking the world enumerator against an
// independently coded evaluation path:
//   - closure by alternating fixpoint (well-founded iteration) instead of
//     stratum-ordered firing with settledness masks;
//   - worlds by brute-force assignment of every random instance from its
//     full declared range, with per-assignment validity/mass checks.
// Restricted to programs whose random selections are unconditional and whose
// derived attributes are boolean (the random-program generator below stays
// inside that fragment).

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "kbplan/plog/engine.hpp"
#include "kbplan/plog/ground.hpp"

namespace kbplan::plog::testref {

using TV = std::vector<std::vector<char>>;  // truth per (inst, value)

inline bool oracle_lit(const GroundProgram& gp, const GroundProgram::GLit& l, const TV& d,
                       const TV& ref) {
  const bool boolean = gp.insts[l.inst].is_boolean;
  if (l.naf) {
    if (l.neq) {
      for (int w = 0; w < gp.insts[l.inst].n_values; ++w)
        if (w != l.value && ref[l.inst][w]) return false;
      return true;
    }
    return !ref[l.inst][l.value];
  }
  if (l.neq) {
    if (boolean) {
      int u = 1 - l.value;
      if (u == 0) return d[l.inst][0] || !ref[l.inst][1];
      return d[l.inst][1] != 0;
    }
    for (int w = 0; w < gp.insts[l.inst].n_values; ++w)
      if (w != l.value && d[l.inst][w]) return true;
    return false;
  }
  if (boolean && l.value == 0) return d[l.inst][0] || !ref[l.inst][1];
  return d[l.inst][l.value] != 0;
}

inline TV oracle_step(const GroundProgram& gp, const std::map<int, int>& sigma, const TV& ref) {
  TV d(gp.n_insts());
  for (int i = 0; i < gp.n_insts(); ++i) d[i].assign(gp.insts[i].n_values, 0);
  for (auto [i, v] : sigma) d[i][v] = 1;
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& r : gp.rules) {
      if (d[r.head_inst][r.head_value]) continue;
      bool fire = true;
      for (const auto& l : r.body)
        if (!oracle_lit(gp, l, d, ref)) {
          fire = false;
          break;
        }
      if (fire) {
        d[r.head_inst][r.head_value] = 1;
        changed = true;
      }
    }
  }
  return d;
}

// Alternating fixpoint; for stratified programs the iteration converges to
// the perfect model. Returns false when it fails to converge (which would
// mean the generator produced a non-stratified program).
inline bool oracle_closure(const GroundProgram& gp, const std::map<int, int>& sigma, TV& out) {
  TV ref(gp.n_insts());
  for (int i = 0; i < gp.n_insts(); ++i) ref[i].assign(gp.insts[i].n_values, 0);
  for (int round = 0; round < 2 * gp.n_insts() + 8; ++round) {
    TV next = oracle_step(gp, sigma, ref);
    if (next == ref) {
      out = std::move(next);
      return true;
    }
    ref = std::move(next);
  }
  return false;
}

struct OracleDist {
  std::vector<std::vector<int16_t>> worlds;
  std::vector<double> probs;
};

inline OracleDist joint_table_oracle(const GroundProgram& gp,
                                     std::span<const Evidence> evidence) {
  std::vector<int> do_val(gp.n_insts(), -1);
  std::vector<GroundProgram::GLit> obs;
  for (const auto& ev : evidence) {
    GroundProgram::GLit g = gp.resolve(ev.lit);
    if (ev.kind == Evidence::Do)
      do_val[g.inst] = g.value;
    else
      obs.push_back(g);
  }

  const auto& order = gp.random_order;
  OracleDist out;
  std::vector<int> sigma(order.size(), 0);
  while (true) {
    std::map<int, int> facts;
    bool skip = false;
    for (size_t k = 0; k < order.size(); ++k) {
      if (do_val[order[k]] >= 0 && sigma[k] != do_val[order[k]]) skip = true;
      facts[order[k]] = sigma[k];
    }
    if (!skip) {
      TV m;
      if (!oracle_closure(gp, facts, m)) throw std::runtime_error("oracle did not converge");
      bool ok = true;
      // derivation conflicts (two values for one instance)
      for (int i = 0; i < gp.n_insts() && ok; ++i) {
        int cnt = 0;
        for (char b : m[i]) cnt += b;
        if (cnt > 1) ok = false;
      }
      // constraints
      for (const auto& c : gp.constraints) {
        if (!ok) break;
        bool fire = true;
        for (const auto& l : c.body)
          if (!oracle_lit(gp, l, m, m)) {
            fire = false;
            break;
          }
        if (fire) ok = false;
      }
      // world values with boolean defaulting
      std::vector<int16_t> w(gp.n_insts(), -1);
      if (ok) {
        for (int i = 0; i < gp.n_insts(); ++i) {
          for (int v = 0; v < gp.insts[i].n_values; ++v)
            if (m[i][v]) w[i] = static_cast<int16_t>(v);
          if (w[i] == -1 && gp.insts[i].is_boolean) w[i] = 0;
        }
      }
      // observations, on final-world truth
      for (const auto& g : obs) {
        if (!ok) break;
        int v = w[g.inst];
        bool base = g.neq ? (v != -1 && v != g.value) : (v == g.value);
        if (g.naf ? base : !base) ok = false;
      }
      // probability mass
      double mass = 1.0;
      for (size_t k = 0; k < order.size() && ok; ++k) {
        int inst = order[k];
        if (do_val[inst] >= 0) continue;
        if (gp.sels_of[inst].size() != 1)
          throw std::runtime_error("oracle fragment expects one selection per instance");
        const auto& sel = gp.randoms[gp.sels_of[inst][0]];
        if (!sel.condition.empty())
          throw std::runtime_error("oracle fragment expects unconditional selections");
        std::vector<int> range;
        for (auto [v, qual] : sel.range)
          if (qual < 0 || (w[qual] == 1)) range.push_back(v);
        bool in_range = false;
        for (int v : range) in_range |= (v == sigma[k]);
        if (!in_range) {
          ok = false;
          break;
        }
        double declared = 0.0;
        int undeclared = static_cast<int>(range.size());
        double this_mass = -1.0;
        for (int pi : gp.prs_of[inst]) {
          const auto& pa = gp.pratoms[pi];
          bool applies = true;
          for (const auto& l : pa.condition)
            if (!oracle_lit(gp, l, m, m)) {
              applies = false;
              break;
            }
          if (!applies) continue;
          bool in_r = false;
          for (int v : range) in_r |= (v == pa.value);
          if (!in_r) continue;
          declared += pa.prob;
          --undeclared;
          if (pa.value == sigma[k]) this_mass = pa.prob;
        }
        if (declared > 1.0 + 1e-9) throw EvalError("oracle: declared mass exceeds 1");
        if (this_mass < 0.0)
          this_mass = undeclared > 0 ? std::max(0.0, 1.0 - declared) / undeclared : 0.0;
        mass *= this_mass;
      }
      if (ok && mass > 0.0) {
        out.worlds.push_back(std::move(w));
        out.probs.push_back(mass);
      }
    }
    // next joint assignment; the empty product runs the body exactly once
    size_t j = order.size();
    while (j-- > 0) {
      if (++sigma[j] < gp.insts[order[j]].n_values) break;
      sigma[j] = 0;
    }
    if (j == static_cast<size_t>(-1)) break;
  }
  // canonical order + normalization
  std::vector<int> idx(out.worlds.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  std::sort(idx.begin(), idx.end(),
            [&](int a, int b) { return out.worlds[a] < out.worlds[b]; });
  OracleDist sorted;
  double total = 0.0;
  for (int i : idx) {
    sorted.worlds.push_back(std::move(out.worlds[i]));
    sorted.probs.push_back(out.probs[i]);
    total += out.probs[i];
  }
  if (total > 0.0)
    for (double& p : sorted.probs) p /= total;
  return sorted;
}

// --- randomized program generator (stays inside the oracle fragment) -------

struct GeneratedCase {
  std::string text;
  std::vector<Evidence> evidence;
  std::vector<std::string> query_literals;
};

inline GeneratedCase random_program(uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto pick = [&](int n) { return static_cast<int>(rng() % n); };

  GeneratedCase g;
  std::string& t = g.text;
  int n_sorts = 1 + pick(2);
  std::vector<int> sort_size(n_sorts);
  for (int s = 0; s < n_sorts; ++s) {
    sort_size[s] = 2 + pick(3);
    t += "s" + std::to_string(s) + " = {";
    for (int o = 0; o < sort_size[s]; ++o)
      t += (o ? ", " : "") + std::string("v") + std::to_string(s) + "_" + std::to_string(o);
    t += "}.\n";
  }

  // random attributes, all 0-ary; cap the joint table size
  int n_rand = 1 + pick(12);
  long table = 1;
  struct RandInfo {
    std::string name;
    int n_values;
    int sort;  // -1 = boolean
  };
  std::vector<RandInfo> rands;
  for (int r = 0; r < n_rand; ++r) {
    RandInfo ri;
    ri.name = "r" + std::to_string(r);
    // keep the full joint table under 8192 rows, assuming the remaining
    // attributes take the minimum two values each
    long floor_rest = 1L << (n_rand - r - 1);
    if (pick(3) == 0 || table * 4 * floor_rest > 8192) {
      ri.sort = -1;
      ri.n_values = 2;
      t += ri.name + " : boolean.\n";
    } else {
      ri.sort = pick(n_sorts);
      ri.n_values = sort_size[ri.sort];
      t += ri.name + " : s" + std::to_string(ri.sort) + ".\n";
    }
    table *= ri.n_values;
    t += "random(" + ri.name + ").\n";
    rands.push_back(ri);
  }
  auto value_name = [&](const RandInfo& ri, int v) {
    if (ri.sort < 0) return std::string(v ? "true" : "false");
    return "v" + std::to_string(ri.sort) + "_" + std::to_string(v);
  };
  auto rand_lit = [&](int upto) {  // literal over a random attr with index < upto
    int r = pick(upto);
    const RandInfo& ri = rands[r];
    int v = pick(ri.n_values);
    int form = pick(3);
    if (ri.sort < 0) {
      if (form == 0) return std::string(v ? "" : "-") + ri.name;
      if (form == 1) return "not " + std::string(v ? "" : "-") + ri.name;
      return ri.name + " != " + value_name(ri, v);
    }
    if (form == 0) return ri.name + " = " + value_name(ri, v);
    if (form == 1) return "not " + ri.name + " = " + value_name(ri, v);
    return ri.name + " != " + value_name(ri, v);
  };

  // derived boolean attributes in levels; bodies only reach lower levels
  int n_der = pick(4);
  std::vector<std::string> derived;
  for (int d = 0; d < n_der; ++d) {
    std::string name = "d" + std::to_string(d);
    t += name + " : boolean.\n";
    bool with_default = pick(2) == 0;
    if (with_default && d > 0) {
      // default with a strong exception through a lower-level literal
      t += "-" + name + " :- " + (pick(2) ? rand_lit(n_rand) : derived[pick(d)]) + ".\n";
      t += name + " :- " + rand_lit(n_rand) + ", not -" + name + ".\n";
    } else {
      int n_body = 1 + pick(2);
      std::string body;
      for (int b = 0; b < n_body; ++b) {
        if (b) body += ", ";
        if (d > 0 && pick(3) == 0) {
          std::string ref = derived[pick(d)];
          int form = pick(3);
          body += (form == 0 ? ref : form == 1 ? "-" + ref : "not " + ref);
        } else {
          body += rand_lit(n_rand);
        }
      }
      t += name + " :- " + body + ".\n";
      if (pick(3) == 0) t += "-" + name + " :- not " + name + ".\n";
    }
    derived.push_back(name);
  }

  // occasionally a constraint over random atoms
  if (pick(3) == 0) t += ":- " + rand_lit(n_rand) + ".\n";

  // pr-atoms: one per (attr, value); optional condition over earlier attrs
  for (int r = 0; r < n_rand; ++r) {
    if (pick(2)) continue;
    const RandInfo& ri = rands[r];
    int n_decl = 1 + pick(ri.n_values);
    double left = 1.0;
    for (int v = 0; v < n_decl; ++v) {
      double p = left * (0.1 + 0.8 * static_cast<double>(rng() % 1000) / 1000.0);
      if (v + 1 == n_decl && pick(2)) p = left;  // sometimes sum exactly to 1
      left -= p;
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.6f", p);
      std::string cond;
      if (r > 0 && pick(2) == 0) cond = " | " + rand_lit(r);
      t += "pr(" + ri.name + " = " + value_name(ri, v) + cond + ") = " + buf + ".\n";
    }
  }

  // evidence: observations anywhere, interventions on random attrs
  if (pick(3) == 0) {
    int r = pick(n_rand);
    Evidence ev;
    ev.kind = Evidence::Obs;
    ev.lit = parse_literal(rands[r].name + " != " + value_name(rands[r], pick(rands[r].n_values)));
    g.evidence.push_back(ev);
  }
  if (!derived.empty() && pick(3) == 0) {
    Evidence ev;
    ev.kind = Evidence::Obs;
    ev.lit = parse_literal((pick(2) ? "" : "-") + derived[pick(static_cast<int>(derived.size()))]);
    g.evidence.push_back(ev);
  }
  if (pick(4) == 0) {
    int r = pick(n_rand);
    Evidence ev;
    ev.kind = Evidence::Do;
    ev.lit = parse_literal(rands[r].name + " = " + value_name(rands[r], pick(rands[r].n_values)));
    g.evidence.push_back(ev);
  }

  // query targets
  g.query_literals.push_back(rand_lit(n_rand));
  if (!derived.empty()) g.query_literals.push_back(derived[pick(static_cast<int>(derived.size()))]);
  return g;
}

}  // namespace kbplan::plog::testref
