#include "kbplan/plan/plan.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

namespace kbplan::plan {

namespace {

void check_stochastic(const model::DecisionModel& m) {
  for (int s = 0; s < m.n_states; ++s)
    for (int a = 0; a < m.n_actions; ++a) {
      double sum = 0.0;
      for (int s2 = 0; s2 < m.n_states; ++s2) sum += m.t(s, a, s2);
      if (std::abs(sum - 1.0) > 1e-6)
        throw std::runtime_error("transition row (" + std::to_string(s) + ", " +
                                 std::to_string(a) + ") sums to " +
                                 std::to_string(sum) + "; not a distribution");
    }
}

double dot(const std::vector<double>& x, const std::vector<double>& y) {
  double v = 0.0;
  for (size_t i = 0; i < x.size(); ++i) v += x[i] * y[i];
  return v;
}

// Nonzero transition entries of one action, for sparse backups.
struct SparseT {
  struct Entry {
    int s, s2;
    double p;
  };
  std::vector<Entry> entries;
};

std::vector<SparseT> sparsify(const model::DecisionModel& m) {
  std::vector<SparseT> out(m.n_actions);
  for (int a = 0; a < m.n_actions; ++a)
    for (int s = 0; s < m.n_states; ++s)
      for (int s2 = 0; s2 < m.n_states; ++s2)
        if (m.t(s, a, s2) != 0.0) out[a].entries.push_back({s, s2, m.t(s, a, s2)});
  return out;
}

}  // namespace

Belief belief_update(const model::DecisionModel& m, const Belief& b, int a,
                     int o) {
  if (!m.pomdp)
    throw std::runtime_error("belief update needs a partially observable model");
  if (static_cast<int>(b.size()) != m.n_states)
    throw std::runtime_error("belief has " + std::to_string(b.size()) +
                             " entries for " + std::to_string(m.n_states) +
                             " states");
  if (a < 0 || a >= m.n_actions || o < 0 || o >= m.n_obs)
    throw std::runtime_error("action or observation id out of range");

  Belief out(m.n_states, 0.0);
  double z = 0.0;
  for (int s2 = 0; s2 < m.n_states; ++s2) {
    double t = 0.0;
    for (int s = 0; s < m.n_states; ++s) t += b[s] * m.t(s, a, s2);
    out[s2] = t * m.o(s2, a, o);
    z += out[s2];
  }
  if (z <= 0.0)
    throw ImpossibleObservation("observation '" + m.obs_names[o] +
                                "' has zero probability after action '" +
                                m.action_names[a] + "'");
  for (auto& x : out) x /= z;
  return out;
}

MdpPolicy value_iteration(const model::DecisionModel& m, double gamma,
                          double eps, const SolveOptions& opt) {
  if (gamma <= 0.0 || gamma >= 1.0)
    throw std::runtime_error("gamma must lie in (0,1)");
  if (eps <= 0.0) throw std::runtime_error("tolerance must be positive");
  check_stochastic(m);

  const int S = m.n_states, A = m.n_actions;
  std::vector<double> v(S, 0.0), v2(S, 0.0);
  MdpPolicy pol;
  pol.action.assign(S, 0);
  pol.value.assign(S, 0.0);

  auto kernel = [&](int s, const std::vector<double>& in, std::vector<double>& out,
                    int* act) {
    if (m.terminal[s]) {
      out[s] = 0.0;
      if (act) act[s] = 0;
      return;
    }
    double best = -std::numeric_limits<double>::infinity();
    int best_a = 0;
    for (int a = 0; a < A; ++a) {
      double q = m.r(s, a);
      for (int s2 = 0; s2 < S; ++s2) q += gamma * m.t(s, a, s2) * in[s2];
      if (q > best) {
        best = q;
        best_a = a;
      }
    }
    out[s] = best;
    if (act) act[s] = best_a;
  };

  auto sweep = [&](const std::vector<double>& in, std::vector<double>& out,
                   int* act) {
    if (opt.parallel) {
#pragma omp parallel for schedule(static)
      for (int s = 0; s < S; ++s) kernel(s, in, out, act);
    } else {
      for (int s = 0; s < S; ++s) kernel(s, in, out, act);
    }
  };

  double residual = 0.0;
  for (int k = 1; k <= opt.max_iter; ++k) {
    sweep(v, v2, nullptr);
    residual = 0.0;
    for (int s = 0; s < S; ++s) residual = std::max(residual, std::abs(v2[s] - v[s]));
    std::swap(v, v2);
    pol.iterations = k;
    pol.residual = residual;
    if (residual < eps) {
      sweep(v, pol.value, pol.action.data());
      return pol;
    }
  }
  throw std::runtime_error("value iteration stopped after " +
                           std::to_string(opt.max_iter) +
                           " sweeps with residual " + std::to_string(residual));
}

double AlphaVectorPolicy::value(const Belief& b) const {
  if (alphas.empty()) throw std::runtime_error("empty alpha-vector policy");
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& al : alphas) best = std::max(best, dot(al.v, b));
  return best;
}

int AlphaVectorPolicy::greedy(const Belief& b) const {
  if (alphas.empty()) throw std::runtime_error("empty alpha-vector policy");
  double best = -std::numeric_limits<double>::infinity();
  int pick = 0;
  for (size_t i = 0; i < alphas.size(); ++i) {
    double v = dot(alphas[i].v, b);
    if (v > best) {
      best = v;
      pick = static_cast<int>(i);
    }
  }
  return alphas[pick].action;
}

int greedy_lookahead(const model::DecisionModel& m, const AlphaVectorPolicy& p,
                     const Belief& b) {
  if (p.alphas.empty()) throw std::runtime_error("empty alpha-vector policy");
  if (static_cast<int>(b.size()) != m.n_states)
    throw std::runtime_error("belief has " + std::to_string(b.size()) +
                             " entries for " + std::to_string(m.n_states) +
                             " states");
  const int S = m.n_states, Z = m.n_obs;
  double best = -std::numeric_limits<double>::infinity();
  int pick = 0;
  Belief next(S);
  for (int a = 0; a < m.n_actions; ++a) {
    double q = 0.0;
    for (int s = 0; s < S; ++s) q += b[s] * m.r(s, a);
    for (int z = 0; z < Z; ++z) {
      double pz = 0.0;
      for (int s2 = 0; s2 < S; ++s2) {
        double t = 0.0;
        for (int s = 0; s < S; ++s) t += b[s] * m.t(s, a, s2);
        next[s2] = t * m.o(s2, a, z);
        pz += next[s2];
      }
      if (pz <= 0.0) continue;
      for (auto& x : next) x /= pz;
      q += p.gamma * pz * p.value(next);
    }
    if (q > best) {
      best = q;
      pick = a;
    }
  }
  return pick;
}

AlphaVectorPolicy pbvi_solve(const model::DecisionModel& m, double gamma,
                             int belief_budget, int horizon_budget,
                             uint64_t seed, const SolveOptions& opt) {
  if (!m.pomdp) throw std::runtime_error("pbvi needs a partially observable model");
  if (gamma <= 0.0 || gamma >= 1.0)
    throw std::runtime_error("gamma must lie in (0,1)");
  if (belief_budget < 1 || horizon_budget < 1)
    throw std::runtime_error("budget exhausted before any backup: need at least "
                             "one belief and one sweep");
  if (m.prior.empty())
    throw std::runtime_error("the model carries no prior to seed beliefs from");
  check_stochastic(m);

  const int S = m.n_states, A = m.n_actions, Z = m.n_obs;
  auto ts = sparsify(m);
  std::mt19937_64 rng(seed);

  // --- belief set expansion ---
  // Seed with the prior plus the simplex corners while the budget allows:
  // backups at corners anchor the fully-resolved plans (terminate/act), which
  // pure novelty-driven expansion is slow to reach.  Then each round every
  // belief enumerates its one-step Bayes successors (every action/observation
  // pair with non-negligible probability) and contributes the one farthest in
  // L1 from the current set; exact distance ties are broken by the seeded
  // rng.  The set roughly doubles per round.
  std::vector<Belief> beliefs{m.prior};
  for (int s = 0; s < S && static_cast<int>(beliefs.size()) < belief_budget;
       ++s) {
    Belief corner(S, 0.0);
    corner[s] = 1.0;
    bool dup = false;
    for (const auto& other : beliefs) {
      double l1 = 0.0;
      for (int i = 0; i < S; ++i) l1 += std::abs(corner[i] - other[i]);
      if (l1 < 1e-12) {
        dup = true;
        break;
      }
    }
    if (!dup) beliefs.push_back(std::move(corner));
  }
  bool grew = true;
  while (static_cast<int>(beliefs.size()) < belief_budget && grew) {
    grew = false;
    const size_t snapshot = beliefs.size();
    for (size_t bi = 0;
         bi < snapshot && static_cast<int>(beliefs.size()) < belief_budget;
         ++bi) {
      const Belief& b = beliefs[bi];
      std::vector<Belief> tied;
      double best_dist = 0.0;
      for (int a = 0; a < A; ++a) {
        std::vector<double> pb(S, 0.0);
        for (int s = 0; s < S; ++s) {
          if (b[s] <= 0.0) continue;
          for (int s2 = 0; s2 < S; ++s2) pb[s2] += b[s] * m.t(s, a, s2);
        }
        for (int o = 0; o < Z; ++o) {
          double z = 0.0;
          for (int s2 = 0; s2 < S; ++s2) z += pb[s2] * m.o(s2, a, o);
          if (z < 1e-9) continue;  // numerically starved branch
          Belief cand(S);
          for (int s2 = 0; s2 < S; ++s2) cand[s2] = pb[s2] * m.o(s2, a, o) / z;
          double d = std::numeric_limits<double>::max();
          for (const auto& other : beliefs) {
            double l1 = 0.0;
            for (int i = 0; i < S; ++i) l1 += std::abs(cand[i] - other[i]);
            d = std::min(d, l1);
          }
          if (d > best_dist + 1e-12) {
            best_dist = d;
            tied.clear();
            tied.push_back(std::move(cand));
          } else if (d > best_dist - 1e-12 && best_dist > 1e-9) {
            tied.push_back(std::move(cand));
          }
        }
      }
      if (best_dist > 1e-9 && !tied.empty()) {
        size_t pick = tied.size() == 1
                          ? 0
                          : static_cast<size_t>(rng() % tied.size());
        beliefs.push_back(std::move(tied[pick]));
        grew = true;
      }
    }
  }

  // --- backups from the blanket lower bound ---
  double r_min = 0.0;
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) r_min = std::min(r_min, m.r(s, a));
  AlphaVectorPolicy pol;
  pol.gamma = gamma;
  pol.alphas.push_back({std::vector<double>(S, r_min / (1.0 - gamma)), 0});

  const int NB = static_cast<int>(beliefs.size());
  for (int sweep = 0; sweep < horizon_budget; ++sweep) {
    std::vector<AlphaVector> fresh(NB);
    auto backup = [&](int bi) {
      const Belief& b = beliefs[bi];
      AlphaVector best;
      double best_score = -std::numeric_limits<double>::infinity();
      std::vector<double> acc(S), pb(S);
      for (int a = 0; a < A; ++a) {
        for (int s = 0; s < S; ++s) acc[s] = m.r(s, a);
        for (int o = 0; o < Z; ++o) {
          std::fill(pb.begin(), pb.end(), 0.0);
          for (const auto& e : ts[a].entries) pb[e.s2] += b[e.s] * e.p;
          for (int s2 = 0; s2 < S; ++s2) pb[s2] *= m.o(s2, a, o);
          int pick = 0;
          double pick_v = -std::numeric_limits<double>::infinity();
          for (size_t g = 0; g < pol.alphas.size(); ++g) {
            double v = dot(pol.alphas[g].v, pb);
            if (v > pick_v) {
              pick_v = v;
              pick = static_cast<int>(g);
            }
          }
          const auto& al = pol.alphas[pick].v;
          for (const auto& e : ts[a].entries)
            acc[e.s] += gamma * e.p * m.o(e.s2, a, o) * al[e.s2];
        }
        double score = dot(acc, b);
        if (score > best_score) {
          best_score = score;
          best = {acc, a};
        }
      }
      fresh[bi] = std::move(best);
    };
    if (opt.parallel) {
#pragma omp parallel for schedule(dynamic)
      for (int bi = 0; bi < NB; ++bi) backup(bi);
    } else {
      for (int bi = 0; bi < NB; ++bi) backup(bi);
    }
    // prune to the argmax set, dropping exact duplicates
    std::vector<AlphaVector> next;
    for (auto& al : fresh) {
      bool dup = false;
      for (const auto& kept : next)
        dup = dup || (kept.action == al.action && kept.v == al.v);
      if (!dup) next.push_back(std::move(al));
    }
    pol.alphas = std::move(next);
  }
  return pol;
}

double expectimax_oracle(const model::DecisionModel& m, const Belief& b,
                         int horizon) {
  if (!m.pomdp)
    throw std::runtime_error("the exact oracle expands observation branches "
                             "and needs a partially observable model");
  if (horizon < 0 || horizon > 8)
    throw std::runtime_error("oracle horizon must lie in [0,8]");
  if (static_cast<long long>(m.n_states) * m.n_actions * m.n_obs > 5000)
    throw std::runtime_error("model too large for the exact oracle");
  if (static_cast<int>(b.size()) != m.n_states)
    throw std::runtime_error("belief size does not match the model");
  double total = std::accumulate(b.begin(), b.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-6)
    throw std::runtime_error("belief is not normalized");

  const int S = m.n_states, A = m.n_actions, Z = m.n_obs;
  // identical sub-beliefs recur across observation orders; memoize per depth
  std::vector<std::map<std::vector<long long>, double>> memo(horizon + 1);

  std::function<double(const Belief&, int)> go = [&](const Belief& bel,
                                                     int h) -> double {
    if (h == 0) return 0.0;
    double live = 0.0;
    for (int s = 0; s < S; ++s)
      if (!m.terminal[s]) live += bel[s];
    if (live < 1e-12) return 0.0;  // absorbed and reward-free forever

    std::vector<long long> key(S);
    for (int s = 0; s < S; ++s) key[s] = llround(bel[s] * 1e10);
    auto hit = memo[h].find(key);
    if (hit != memo[h].end()) return hit->second;

    double best = -std::numeric_limits<double>::infinity();
    std::vector<double> tb(S), ob(S);
    for (int a = 0; a < A; ++a) {
      double ev = 0.0;
      for (int s = 0; s < S; ++s) ev += bel[s] * m.r(s, a);
      std::fill(tb.begin(), tb.end(), 0.0);
      for (int s = 0; s < S; ++s) {
        if (bel[s] == 0.0) continue;
        for (int s2 = 0; s2 < S; ++s2) tb[s2] += bel[s] * m.t(s, a, s2);
      }
      for (int o = 0; o < Z; ++o) {
        double po = 0.0;
        for (int s2 = 0; s2 < S; ++s2) po += tb[s2] * m.o(s2, a, o);
        if (po <= 1e-15) continue;
        for (int s2 = 0; s2 < S; ++s2) ob[s2] = tb[s2] * m.o(s2, a, o) / po;
        ev += m.gamma * po * go(ob, h - 1);
      }
      best = std::max(best, ev);
    }
    memo[h][std::move(key)] = best;
    return best;
  };
  return go(b, horizon);
}

// --- policy files --------------------------------------------------------

namespace {

constexpr const char* kMagic = "kbplan-policy";
constexpr const char* kVersion = "v1";

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.precision(17);
  return out;
}

std::ifstream open_in(const std::string& path, const model::DecisionModel& m,
                      std::string* kind, double* gamma, int* count_a,
                      int* count_b) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string magic, version, kw;
  in >> magic >> version;
  if (magic != kMagic || version != kVersion)
    throw std::runtime_error(path + ": unsupported policy file header");
  std::string hash;
  in >> kw >> hash;
  if (kw != "model" || !in)
    throw std::runtime_error(path + ": malformed policy file");
  if (std::stoull(hash, nullptr, 16) != m.fingerprint())
    throw std::runtime_error(path +
                             ": policy was computed for a different model "
                             "(hash mismatch)");
  in >> kw >> *kind >> kw >> *gamma >> kw >> *count_a >> kw >> *count_b;
  if (!in) throw std::runtime_error(path + ": malformed policy file");
  return in;
}

}  // namespace

void save_mdp_policy(const std::string& path, const model::DecisionModel& m,
                     const MdpPolicy& p, double gamma) {
  if (static_cast<int>(p.action.size()) != m.n_states ||
      static_cast<int>(p.value.size()) != m.n_states)
    throw std::runtime_error("policy size does not match the model");
  auto out = open_out(path);
  char hex[32];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(m.fingerprint()));
  out << kMagic << " " << kVersion << "\n";
  out << "model " << hex << "\n";
  out << "kind mdp gamma " << gamma << " states " << m.n_states << " actions "
      << m.n_actions << "\n";
  out << "action";
  for (int a : p.action) out << " " << a;
  out << "\nvalue";
  for (double v : p.value) out << " " << v;
  out << "\n";
}

MdpPolicy load_mdp_policy(const std::string& path,
                          const model::DecisionModel& m, double* gamma) {
  std::string kind;
  double g = 0.0;
  int S = 0, A = 0;
  auto in = open_in(path, m, &kind, &g, &S, &A);
  if (kind != "mdp") throw std::runtime_error(path + ": not an mdp policy");
  if (S != m.n_states || A != m.n_actions)
    throw std::runtime_error(path + ": model shape mismatch");
  MdpPolicy p;
  p.action.resize(S);
  p.value.resize(S);
  std::string kw;
  in >> kw;
  for (int s = 0; s < S; ++s) in >> p.action[s];
  in >> kw;
  for (int s = 0; s < S; ++s) in >> p.value[s];
  if (!in) throw std::runtime_error(path + ": truncated policy file");
  for (int a : p.action)
    if (a < 0 || a >= A)
      throw std::runtime_error(path + ": action id out of range");
  if (gamma) *gamma = g;
  return p;
}

void save_alpha_policy(const std::string& path, const model::DecisionModel& m,
                       const AlphaVectorPolicy& p) {
  if (p.alphas.empty()) throw std::runtime_error("empty alpha-vector policy");
  auto out = open_out(path);
  char hex[32];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(m.fingerprint()));
  out << kMagic << " " << kVersion << "\n";
  out << "model " << hex << "\n";
  out << "kind pomdp gamma " << p.gamma << " states " << m.n_states
      << " alphas " << p.alphas.size() << "\n";
  for (const auto& al : p.alphas) {
    if (static_cast<int>(al.v.size()) != m.n_states)
      throw std::runtime_error("alpha vector size does not match the model");
    out << "alpha " << al.action;
    for (double v : al.v) out << " " << v;
    out << "\n";
  }
}

AlphaVectorPolicy load_alpha_policy(const std::string& path,
                                    const model::DecisionModel& m) {
  std::string kind;
  double g = 0.0;
  int S = 0, K = 0;
  auto in = open_in(path, m, &kind, &g, &S, &K);
  if (kind != "pomdp") throw std::runtime_error(path + ": not a pomdp policy");
  if (S != m.n_states || K < 1)
    throw std::runtime_error(path + ": model shape mismatch");
  AlphaVectorPolicy p;
  p.gamma = g;
  for (int k = 0; k < K; ++k) {
    std::string kw;
    AlphaVector al;
    in >> kw >> al.action;
    if (kw != "alpha" || al.action < 0 || al.action >= m.n_actions)
      throw std::runtime_error(path + ": malformed alpha vector");
    al.v.resize(S);
    for (int s = 0; s < S; ++s) in >> al.v[s];
    if (!in) throw std::runtime_error(path + ": truncated policy file");
    p.alphas.push_back(std::move(al));
  }
  return p;
}

}  // namespace kbplan::plan
