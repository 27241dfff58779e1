#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "vendor/doctest.h"

#include <cmath>
#include <filesystem>

#include "kbplan/domains/dialog.hpp"
#include "kbplan/domains/navigation.hpp"
#include "kbplan/plan/plan.hpp"

using namespace kbplan;
using plan::Belief;

namespace {

model::DecisionModel blank(int S, int A, int Z) {
  model::DecisionModel m;
  m.pomdp = Z > 0;
  m.n_states = S;
  m.n_actions = A;
  m.n_obs = Z;
  for (int s = 0; s < S; ++s) m.state_names.push_back("s" + std::to_string(s));
  for (int a = 0; a < A; ++a) m.action_names.push_back("a" + std::to_string(a));
  for (int z = 0; z < Z; ++z) m.obs_names.push_back("o" + std::to_string(z));
  m.trans.assign(static_cast<size_t>(S) * A * S, 0.0);
  m.reward.assign(static_cast<size_t>(S) * A, 0.0);
  if (Z > 0) m.obs.assign(static_cast<size_t>(S) * A * Z, 0.0);
  m.terminal.assign(S, 0);
  return m;
}

void set_t(model::DecisionModel& m, int s, int a, int s2, double p) {
  m.trans[(static_cast<size_t>(s) * m.n_actions + a) * m.n_states + s2] = p;
}
void set_r(model::DecisionModel& m, int s, int a, double r) {
  m.reward[static_cast<size_t>(s) * m.n_actions + a] = r;
}
void set_o(model::DecisionModel& m, int s2, int a, int z, double p) {
  m.obs[(static_cast<size_t>(s2) * m.n_actions + a) * m.n_obs + z] = p;
}

// x --go--> sink (terminal), reward 50 on the way out.
model::DecisionModel one_step() {
  auto m = blank(2, 1, 0);
  set_t(m, 0, 0, 1, 1.0);
  set_t(m, 1, 0, 1, 1.0);
  set_r(m, 0, 0, 50.0);
  m.terminal[1] = 1;
  return m;
}

// s0 -> s1 -> s1 forever; rewards 1 then 2 per step, nothing terminal.
model::DecisionModel chain() {
  auto m = blank(2, 1, 0);
  set_t(m, 0, 0, 1, 1.0);
  set_t(m, 1, 0, 1, 1.0);
  set_r(m, 0, 0, 1.0);
  set_r(m, 1, 0, 2.0);
  return m;
}

// Identity transitions with a configurable 2-observation sensor.
model::DecisionModel sensor2(double o0_s0, double o0_s1) {
  auto m = blank(2, 1, 2);
  set_t(m, 0, 0, 0, 1.0);
  set_t(m, 1, 0, 1, 1.0);
  set_o(m, 0, 0, 0, o0_s0);
  set_o(m, 0, 0, 1, 1.0 - o0_s0);
  set_o(m, 1, 0, 0, o0_s1);
  set_o(m, 1, 0, 1, 1.0 - o0_s1);
  m.prior = {0.5, 0.5};
  return m;
}

// Two hidden states fully revealed by a free deterministic sensor, moving
// like chain(); the optimal value is the underlying MDP's.
model::DecisionModel revealed_chain() {
  auto m = blank(2, 1, 2);
  set_t(m, 0, 0, 1, 1.0);
  set_t(m, 1, 0, 1, 1.0);
  set_r(m, 0, 0, 1.0);
  set_r(m, 1, 0, 2.0);
  set_o(m, 0, 0, 0, 1.0);
  set_o(m, 1, 0, 1, 1.0);
  m.prior = {0.5, 0.5};
  return m;
}

// Classic two-door guessing game: listen (noisy), or open a door.
model::DecisionModel tiger() {
  auto m = blank(3, 3, 3);  // states: left, right, done; obs: hl, hr, none
  const int L = 0, R = 1, D = 2;
  const int listen = 0, open_l = 1, open_r = 2;
  for (int s : {L, R, D}) {
    set_t(m, s, listen, s, 1.0);
    set_t(m, s, open_l, D, 1.0);
    set_t(m, s, open_r, D, 1.0);
  }
  set_r(m, L, listen, -1.0);
  set_r(m, R, listen, -1.0);
  set_r(m, L, open_l, -100.0);
  set_r(m, R, open_l, 10.0);
  set_r(m, L, open_r, 10.0);
  set_r(m, R, open_r, -100.0);
  set_o(m, L, listen, 0, 0.85);
  set_o(m, L, listen, 1, 0.15);
  set_o(m, R, listen, 0, 0.15);
  set_o(m, R, listen, 1, 0.85);
  set_o(m, D, listen, 2, 1.0);
  for (int s : {L, R, D})
    for (int a : {open_l, open_r}) set_o(m, s, a, 2, 1.0);
  m.terminal[D] = 1;
  m.prior = {0.5, 0.5, 0.0};
  return m;
}

}  // namespace

TEST_CASE("belief update: uninformative, informative and revealing sensors") {
  auto flat = sensor2(0.5, 0.5);
  Belief b{0.3, 0.7};
  auto b1 = plan::belief_update(flat, b, 0, 0);
  CHECK(b1[0] == doctest::Approx(0.3));
  CHECK(b1[1] == doctest::Approx(0.7));

  auto skew = sensor2(0.8, 0.4);
  auto b2 = plan::belief_update(skew, {0.5, 0.5}, 0, 0);
  CHECK(b2[0] == doctest::Approx(2.0 / 3.0));
  CHECK(b2[1] == doctest::Approx(1.0 / 3.0));
  CHECK(b2[0] + b2[1] == doctest::Approx(1.0));

  auto sharp = sensor2(1.0, 0.0);
  auto b3 = plan::belief_update(sharp, {0.5, 0.5}, 0, 1);
  CHECK(b3[0] == doctest::Approx(0.0));
  CHECK(b3[1] == doctest::Approx(1.0));
}

TEST_CASE("belief update rejects impossible observations and bad inputs") {
  auto sharp = sensor2(1.0, 1.0);  // observation o1 can never happen
  CHECK_THROWS_AS(plan::belief_update(sharp, {0.5, 0.5}, 0, 1),
                  plan::ImpossibleObservation);
  CHECK_THROWS_AS(plan::belief_update(sharp, {0.5, 0.5}, 0, 7),
                  std::runtime_error);
  CHECK_THROWS_AS(plan::belief_update(sharp, {1.0}, 0, 0), std::runtime_error);
  auto mdp = one_step();
  CHECK_THROWS_AS(plan::belief_update(mdp, {0.5, 0.5}, 0, 0),
                  std::runtime_error);
}

TEST_CASE("repeated uninformative updates keep the belief in the simplex") {
  auto flat = sensor2(0.5, 0.5);
  Belief b{0.25, 0.75};
  for (int k = 0; k < 50; ++k) {
    b = plan::belief_update(flat, b, 0, k % 2);
    double sum = b[0] + b[1];
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(b[0] >= 0.0);
    CHECK(b[1] >= 0.0);
  }
  CHECK(b[0] == doctest::Approx(0.25));
}

TEST_CASE("value iteration: episodic one-step value and geometric chain") {
  auto m1 = one_step();
  auto p1 = plan::value_iteration(m1, 0.95, 1e-10);
  CHECK(p1.value[0] == doctest::Approx(50.0));
  CHECK(p1.value[1] == doctest::Approx(0.0));
  CHECK(p1.residual < 1e-10);

  auto m2 = chain();
  auto p2 = plan::value_iteration(m2, 0.9, 1e-12);
  // V(s1) = 2/(1-0.9) = 20, V(s0) = 1 + 0.9*20 = 19
  CHECK(p2.value[1] == doctest::Approx(20.0).epsilon(1e-9));
  CHECK(p2.value[0] == doctest::Approx(19.0).epsilon(1e-9));
}

TEST_CASE("value iteration: tie-break, scale invariance, error paths") {
  auto m = blank(2, 2, 0);  // two identical actions
  for (int a : {0, 1}) {
    set_t(m, 0, a, 1, 1.0);
    set_t(m, 1, a, 1, 1.0);
    set_r(m, 0, a, 5.0);
  }
  m.terminal[1] = 1;
  auto p = plan::value_iteration(m, 0.95, 1e-10);
  CHECK(p.action[0] == 0);  // lowest index wins the tie

  auto m2 = chain();
  for (auto& r : m2.reward) r *= 2.0;
  auto p2 = plan::value_iteration(m2, 0.9, 1e-12);
  auto p1 = plan::value_iteration(chain(), 0.9, 1e-12);
  CHECK(p2.action == p1.action);
  CHECK(p2.value[0] == doctest::Approx(2.0 * p1.value[0]).epsilon(1e-9));

  auto broken = chain();
  broken.trans[0] = 0.5;  // row no longer sums to 1
  broken.trans[1] = 0.2;
  CHECK_THROWS_WITH_AS(plan::value_iteration(broken, 0.9, 1e-10),
                       doctest::Contains("not a distribution"),
                       std::runtime_error);

  plan::SolveOptions tight;
  tight.max_iter = 1;
  CHECK_THROWS_WITH_AS(plan::value_iteration(chain(), 0.9, 1e-12, tight),
                       doctest::Contains("residual"), std::runtime_error);
  CHECK_THROWS_AS(plan::value_iteration(chain(), 1.5, 1e-10),
                  std::runtime_error);
}

TEST_CASE("value iteration: parallel sweep is bitwise equal to the serial one") {
  auto m = domains::build_navigation_model(domains::NavConfig{}, {});
  plan::SolveOptions par, ser;
  par.parallel = true;
  ser.parallel = false;
  auto pp = plan::value_iteration(m, m.gamma, 1e-10, par);
  auto ps = plan::value_iteration(m, m.gamma, 1e-10, ser);
  CHECK(pp.iterations == ps.iterations);
  CHECK(pp.action == ps.action);
  REQUIRE(pp.value.size() == ps.value.size());
  for (size_t s = 0; s < pp.value.size(); ++s) CHECK(pp.value[s] == ps.value[s]);
}

TEST_CASE("navigation values: the safe detour beats the sunny shortcut") {
  domains::NavConfig cfg;
  auto m = domains::build_navigation_model(cfg, {});
  auto pol = plan::value_iteration(m, m.gamma, 1e-10);
  auto b = domains::build_navigation_domain(cfg);
  auto ss = model::log_reason(b, {});
  auto info = domains::navigation_states(ss);
  int start = -1;
  for (int s = 0; s < ss.size(); ++s)
    if (info[s].row == cfg.start.first && info[s].col == cfg.start.second &&
        !info[s].term)
      start = s;
  REQUIRE(start >= 0);
  CHECK(pol.value[start] > 0.0);  // the goal is reachable and worth it
  // on the sunny row, crossing is a last resort: moving up out of the sun
  // beats staying in it
  int sunny_cell = -1;
  for (int s = 0; s < ss.size(); ++s)
    if (info[s].row == 2 && info[s].col == 3 && !info[s].term) sunny_cell = s;
  REQUIRE(sunny_cell >= 0);
  CHECK(pol.action[sunny_cell] == 0);  // up, toward the goal side
}

TEST_CASE("pbvi on a fully revealed chain matches the underlying MDP") {
  auto m = revealed_chain();
  auto mdp = chain();
  auto vi = plan::value_iteration(mdp, 0.9, 1e-12);
  auto pol = plan::pbvi_solve(m, 0.9, 6, 200, 42);
  CHECK(pol.value({1.0, 0.0}) == doctest::Approx(vi.value[0]).epsilon(1e-6));
  CHECK(pol.value({0.0, 1.0}) == doctest::Approx(vi.value[1]).epsilon(1e-6));
  CHECK(pol.value({0.5, 0.5}) <= 0.5 * (vi.value[0] + vi.value[1]) + 1e-6);
}

TEST_CASE("pbvi is deterministic per seed and bounded by the exact oracle") {
  auto parts = domains::build_dialog_model(domains::dialog_paper_small(), {});
  const auto& m = parts.m;

  auto p1 = plan::pbvi_solve(m, m.gamma, 20, 40, 7);
  auto p2 = plan::pbvi_solve(m, m.gamma, 20, 40, 7);
  REQUIRE(p1.alphas.size() == p2.alphas.size());
  for (size_t i = 0; i < p1.alphas.size(); ++i) {
    CHECK(p1.alphas[i].action == p2.alphas[i].action);
    CHECK(p1.alphas[i].v == p2.alphas[i].v);
  }

  std::vector<Belief> probes{m.prior};
  Belief point(m.n_states, 0.0);
  point[0] = 1.0;
  probes.push_back(point);
  Belief mix(m.n_states, 0.0);
  mix[0] = 0.6;
  mix[1] = 0.4;
  probes.push_back(mix);
  for (int h : {2, 4}) {
    auto ph = plan::pbvi_solve(m, m.gamma, 20, h, 7);
    for (const auto& b : probes)
      CHECK(ph.value(b) <= plan::expectimax_oracle(m, b, h) + 1e-6);
  }
}

TEST_CASE("pbvi values at sampled beliefs grow monotonically with sweeps") {
  auto parts = domains::build_dialog_model(domains::dialog_paper_small(), {});
  const auto& m = parts.m;
  double prev = -1e18;
  for (int h = 1; h <= 12; ++h) {
    auto pol = plan::pbvi_solve(m, m.gamma, 12, h, 11);
    double v = pol.value(m.prior);
    CHECK(v >= prev - 1e-9);
    prev = v;
  }
}

TEST_CASE("pbvi greedy: question when unsure, deliver when confident") {
  auto parts = domains::build_dialog_model(domains::dialog_paper_small(), {});
  const auto& m = parts.m;
  auto pol = plan::pbvi_solve(m, m.gamma, 64, 260, 3);

  int at_prior = pol.greedy(m.prior);
  CHECK(at_prior < parts.n_questions);

  for (int s = 0; s < parts.ss.size(); ++s) {
    Belief sure(m.n_states, 0.0);
    sure[s] = 1.0;
    int a = pol.greedy(sure);
    CHECK(a >= parts.n_questions);
    const auto& rq = parts.requests[s];
    CHECK(parts.actions[a] ==
          "deliver_" + rq.item + "_" + rq.room + "_" + rq.person);
  }
}

TEST_CASE("pbvi on the tiger game: listening bracketed by the two doors") {
  auto m = tiger();
  auto pol = plan::pbvi_solve(m, 0.95, 30, 260, 5);
  std::vector<int> picks;
  for (int k = 0; k <= 20; ++k) {
    double bl = k / 20.0;
    picks.push_back(pol.greedy({bl, 1.0 - bl, 0.0}));
  }
  CHECK(picks.front() == 1);            // tiger surely right: open left
  CHECK(picks.back() == 2);             // tiger surely left: open right
  CHECK(picks[10] == 0);                // dead even: listen
  // the listen region is one contiguous interval
  int first = -1, last = -1;
  for (int i = 0; i < static_cast<int>(picks.size()); ++i)
    if (picks[i] == 0) {
      if (first < 0) first = i;
      last = i;
    }
  REQUIRE(first >= 0);
  for (int i = first; i <= last; ++i) CHECK(picks[i] == 0);
  for (int i = 0; i < first; ++i) CHECK(picks[i] == 1);
  for (int i = last + 1; i < static_cast<int>(picks.size()); ++i)
    CHECK(picks[i] == 2);
}

TEST_CASE("pbvi argument validation") {
  auto m = tiger();
  CHECK_THROWS_WITH_AS(plan::pbvi_solve(m, 0.95, 0, 10, 1),
                       doctest::Contains("budget"), std::runtime_error);
  CHECK_THROWS_AS(plan::pbvi_solve(m, 0.95, 10, 0, 1), std::runtime_error);
  CHECK_THROWS_AS(plan::pbvi_solve(one_step(), 0.95, 4, 4, 1),
                  std::runtime_error);
  auto noprior = tiger();
  noprior.prior.clear();
  CHECK_THROWS_AS(plan::pbvi_solve(noprior, 0.95, 4, 4, 1),
                  std::runtime_error);
}

TEST_CASE("expectimax oracle: base cases, one-step values and guards") {
  auto parts = domains::build_dialog_model(domains::dialog_paper_small(), {});
  const auto& m = parts.m;
  CHECK(plan::expectimax_oracle(m, m.prior, 0) == doctest::Approx(0.0));
  // at the uniform prior the cheapest wh-question beats any gamble
  CHECK(plan::expectimax_oracle(m, m.prior, 1) == doctest::Approx(-1.0));
  Belief sure(m.n_states, 0.0);
  sure[0] = 1.0;
  CHECK(plan::expectimax_oracle(m, sure, 1) == doctest::Approx(50.0));
  // deeper search can only help
  CHECK(plan::expectimax_oracle(m, m.prior, 4) >=
        plan::expectimax_oracle(m, m.prior, 1) - 1e-9);

  CHECK_THROWS_AS(plan::expectimax_oracle(m, m.prior, 9), std::runtime_error);
  auto big = domains::build_dialog_model(domains::dialog_paper_full(), {});
  CHECK_THROWS_WITH_AS(
      plan::expectimax_oracle(big.m, big.m.prior, 2),
      doctest::Contains("too large"), std::runtime_error);
  Belief bad(m.n_states, 0.0);
  CHECK_THROWS_AS(plan::expectimax_oracle(m, bad, 2), std::runtime_error);
}

TEST_CASE("alpha policies and mdp policies round-trip through files") {
  auto nav = domains::build_navigation_model(domains::NavConfig{}, {});
  auto vi = plan::value_iteration(nav, nav.gamma, 1e-10);
  std::string dir = "tmp_policies";
  std::filesystem::create_directories(dir);
  plan::save_mdp_policy(dir + "/nav.policy", nav, vi, nav.gamma);
  double g = 0.0;
  auto back = plan::load_mdp_policy(dir + "/nav.policy", nav, &g);
  CHECK(g == doctest::Approx(nav.gamma));
  CHECK(back.action == vi.action);
  REQUIRE(back.value.size() == vi.value.size());
  for (size_t s = 0; s < vi.value.size(); ++s)
    CHECK(back.value[s] == vi.value[s]);

  auto parts = domains::build_dialog_model(domains::dialog_paper_small(), {});
  auto pol = plan::pbvi_solve(parts.m, parts.m.gamma, 12, 30, 9);
  plan::save_alpha_policy(dir + "/dialog.policy", parts.m, pol);
  auto pback = plan::load_alpha_policy(dir + "/dialog.policy", parts.m);
  CHECK(pback.gamma == doctest::Approx(pol.gamma));
  REQUIRE(pback.alphas.size() == pol.alphas.size());
  for (size_t i = 0; i < pol.alphas.size(); ++i) {
    CHECK(pback.alphas[i].action == pol.alphas[i].action);
    CHECK(pback.alphas[i].v == pol.alphas[i].v);
  }

  // a policy saved for one model refuses to load against another
  CHECK_THROWS_WITH_AS(plan::load_mdp_policy(dir + "/nav.policy", parts.m),
                       doctest::Contains("different model"),
                       std::runtime_error);
  CHECK_THROWS_AS(plan::load_alpha_policy(dir + "/nav.policy", nav),
                  std::runtime_error);  // kind mismatch

  std::ofstream(dir + "/junk.policy") << "not a policy\n";
  CHECK_THROWS_AS(plan::load_mdp_policy(dir + "/junk.policy", nav),
                  std::runtime_error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("reward scaling leaves greedy pomdp actions unchanged") {
  auto m = tiger();
  auto pol1 = plan::pbvi_solve(m, 0.95, 20, 200, 13);
  auto m2 = m;
  for (auto& r : m2.reward) r *= 3.0;
  auto pol2 = plan::pbvi_solve(m2, 0.95, 20, 200, 13);
  for (int k = 0; k <= 10; ++k) {
    double bl = k / 10.0;
    Belief b{bl, 1.0 - bl, 0.0};
    CHECK(pol1.greedy(b) == pol2.greedy(b));
  }
}
