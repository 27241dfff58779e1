#pragma once
// Solvers for the assembled decision models: value iteration for MDPs,
// belief tracking and point-based value iteration for POMDPs, and a small
// exact expectimax search used as a testing oracle.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "kbplan/model/model.hpp"

namespace kbplan::plan {

using Belief = std::vector<double>;

// Raised when an observation has zero probability under (belief, action);
// the caller decides how to recover (the controller resets to the prior).
struct ImpossibleObservation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Eq.-style Bayes update: b'(s') ~ O(s',a,o) * sum_s T(s,a,s') b(s).
Belief belief_update(const model::DecisionModel& m, const Belief& b, int a,
                     int o);

struct MdpPolicy {
  std::vector<int> action;    // greedy action per state (0 for terminals)
  std::vector<double> value;  // converged state values
  int iterations = 0;
  double residual = 0.0;  // final Bellman residual
};

struct SolveOptions {
  int max_iter = 200000;
  bool parallel = true;  // OpenMP sweep; the serial path is kept as the
                         // reference and must produce bitwise-equal values
};

// Jacobi-style value iteration to Bellman residual < eps.  Ties in the
// greedy argmax break toward the lowest action index.  Throws when the
// iteration cap is hit (message carries the last residual).
MdpPolicy value_iteration(const model::DecisionModel& m, double gamma,
                          double eps, const SolveOptions& opt = {});

struct AlphaVector {
  std::vector<double> v;  // one entry per state
  int action = 0;
};

struct AlphaVectorPolicy {
  std::vector<AlphaVector> alphas;
  double gamma = 0.95;

  double value(const Belief& b) const;  // max_alpha <alpha, b>
  int greedy(const Belief& b) const;    // action of the argmax alpha
};

// One-step lookahead through the alpha-set value function:
// argmax_a [ r(b,a) + gamma * sum_z P(z|b,a) * value(update(b,a,z)) ].
// Sturdier action selection than `greedy` where the belief set was sparse:
// taking the owning hyperplane's action can repeat a question that no
// longer moves the belief, while the lookahead sees that its posterior is
// stuck and switches to an action that still pays.  Ties go to the lowest
// action index; observations with zero probability are skipped.
int greedy_lookahead(const model::DecisionModel& m,
                     const AlphaVectorPolicy& p, const Belief& b);

// Point-based value iteration: seeds a belief set with the model prior and
// the simplex corners (while the budget allows), expands it farthest-point
// over one-step Bayes successors (deterministic per seed), then runs
// horizon_budget backup sweeps over it starting from the r_min/(1-gamma)
// blanket bound.  Values at sampled beliefs are lower bounds on optimal.
AlphaVectorPolicy pbvi_solve(const model::DecisionModel& m, double gamma,
                             int belief_budget, int horizon_budget,
                             uint64_t seed, const SolveOptions& opt = {});

// Exact finite-horizon value by full belief-tree expansion.  Guarded:
// horizon <= 8 and |S|*|A|*|Z| <= 5000.
double expectimax_oracle(const model::DecisionModel& m, const Belief& b,
                         int horizon);

// Versioned flat-file policy store.  Loading verifies the model hash and
// refuses a policy computed for a different model.
void save_mdp_policy(const std::string& path, const model::DecisionModel& m,
                     const MdpPolicy& p, double gamma);
MdpPolicy load_mdp_policy(const std::string& path,
                          const model::DecisionModel& m,
                          double* gamma = nullptr);
void save_alpha_policy(const std::string& path, const model::DecisionModel& m,
                       const AlphaVectorPolicy& p);
AlphaVectorPolicy load_alpha_policy(const std::string& path,
                                    const model::DecisionModel& m);

}  // namespace kbplan::plan
