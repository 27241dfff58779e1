#pragma once
// Grid navigation world: an agent moves between rooms on a rows x cols grid,
// a walker blocks one cell at a time, and cells near a window may be under
// sunlight in the morning, where the robot risks getting lost.  The
// knowledge bundle declares movement and termination distributions; the
// simulator mirrors them as ground truth.

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "kbplan/model/build.hpp"
#include "kbplan/model/bundle.hpp"
#include "kbplan/model/model.hpp"

namespace kbplan::domains {

struct NavConfig {
  int rows = 5;
  int cols = 6;
  std::pair<int, int> start{4, 3};
  std::pair<int, int> goal{0, 3};
  std::vector<std::pair<int, int>> near_window{{2, 2}, {2, 3}, {2, 4}, {2, 5}};
  std::vector<std::string> times{"morning", "noon", "afternoon"};
  std::vector<std::string> weathers{"sunny", "cloudy", "rainy", "snowy", "windy"};
  // Assumed when unsensed, and also the conditions under which near-window
  // cells are actually sunlit (rule and simulator read the same pair).
  std::string default_time = "morning";
  std::string default_weather = "sunny";
  // The walker cycles along this path, advancing one cell every
  // walker_period agent steps (it moves at a fifth of the robot's speed).
  std::vector<std::pair<int, int>> walker_path{{2, 0}, {2, 1}, {3, 1}, {3, 0}};
  int walker_period = 5;
  double move_success = 0.9;
  double sun_loss = 0.9;
  double goal_reward = 50.0;
  double fail_penalty = 100.0;
  double step_cost = 1.0;
  double gamma = 0.95;
};

// Checks the configuration and returns the knowledge bundle in memory.
// Throws std::runtime_error when the goal sits on a near-window cell (the
// sunlight default would make reaching it a coin toss at best) or any cell
// reference leaves the grid.
model::DomainBundle build_navigation_domain(const NavConfig& cfg);

// Writes domain.plog / dynamics.plog / priors.plog / task.json under dir.
void write_navigation_domain(const NavConfig& cfg, const std::string& dir);

// Reward table for an already-computed state space and transition table:
// each step costs step_cost, entering the goal pays goal_reward, getting
// lost costs fail_penalty, both weighted by the transition probability.
std::vector<double> navigation_reward(const NavConfig& cfg,
                                      const model::StateSpace& ss,
                                      const model::Transitions& tr);

std::vector<uint8_t> navigation_terminal(const model::StateSpace& ss);

// Full pipeline: state space, transitions, rewards, assembly.
model::DecisionModel build_navigation_model(const NavConfig& cfg,
                                            const std::vector<std::string>& sensed);

// Per-state grid coordinates recovered from the projected state vectors.
struct NavStateInfo {
  int row = 0;
  int col = 0;
  bool term = false;
};
std::vector<NavStateInfo> navigation_states(const model::StateSpace& ss);

// Ground-truth environment.  Deterministic given (config, seed).
class NavSimulator {
 public:
  NavSimulator(const NavConfig& cfg, uint64_t seed);

  struct Outcome {
    double reward = 0.0;
    bool terminated = false;
    bool reached_goal = false;
    bool lost = false;
    bool bumped = false;  // move failed because the walker held the target
  };

  // Applies one of up/down/left/right; the walker then advances on its
  // patrol.  Throws std::logic_error once the episode has terminated.
  Outcome step(const std::string& action);

  int row() const { return row_; }
  int col() const { return col_; }
  bool done() const { return term_; }
  std::pair<int, int> walker() const { return cfg_.walker_path[walker_at_]; }
  const std::string& true_time() const { return time_; }
  const std::string& true_weather() const { return weather_; }
  void set_conditions(const std::string& time, const std::string& weather);
  // Exogenous event: the walker jumps to a new patrol.  Throws on an empty
  // or out-of-grid path.
  void relocate_walker(const std::vector<std::pair<int, int>>& path);

  // What the robot's sensors report right now, as knowledge-base facts.
  std::vector<std::string> sense_facts() const;

 private:
  bool truly_sunny(int r, int c) const;

  NavConfig cfg_;
  std::mt19937_64 rng_;
  int row_, col_;
  bool term_ = false;
  int walker_at_ = 0;
  int tick_ = 0;
  std::string time_, weather_;
};

std::string row_name(int r);  // "rw2"
std::string col_name(int c);  // "cl0"

}  // namespace kbplan::domains
