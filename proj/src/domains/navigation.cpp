#include "kbplan/domains/navigation.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace kbplan::domains {

std::string row_name(int r) { return "rw" + std::to_string(r); }
std::string col_name(int c) { return "cl" + std::to_string(c); }

namespace {

void check_cell(const NavConfig& cfg, std::pair<int, int> cell, const char* what) {
  if (cell.first < 0 || cell.first >= cfg.rows || cell.second < 0 ||
      cell.second >= cfg.cols)
    throw std::runtime_error(std::string(what) + " (" +
                             std::to_string(cell.first) + "," +
                             std::to_string(cell.second) + ") is off the grid");
}

void validate(const NavConfig& cfg) {
  if (cfg.rows < 2 || cfg.cols < 2)
    throw std::runtime_error("the grid needs at least two rows and columns");
  check_cell(cfg, cfg.start, "start cell");
  check_cell(cfg, cfg.goal, "goal cell");
  for (auto w : cfg.near_window) check_cell(cfg, w, "near-window cell");
  for (auto w : cfg.walker_path) check_cell(cfg, w, "walker path cell");
  if (cfg.walker_path.empty())
    throw std::runtime_error("the walker path needs at least one cell");
  for (auto w : cfg.near_window)
    if (w == cfg.goal)
      throw std::runtime_error(
          "the goal sits on a near-window cell: the sunlight loss rule would "
          "swallow arrivals");
  for (double p : {cfg.move_success, cfg.sun_loss})
    if (p < 0.0 || p > 1.0)
      throw std::runtime_error("probabilities must lie in [0,1]");
  if (cfg.times.empty() || cfg.weathers.empty())
    throw std::runtime_error("time and weather sorts must be non-empty");
}

std::string join_objects(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) {
    if (!out.empty()) out += ", ";
    out += s;
  }
  return out;
}

std::string domain_text(const NavConfig& cfg) {
  std::ostringstream o;
  o << "% static navigation knowledge: grid layout, windows, sunlight default\n";
  o << "row = {";
  for (int r = 0; r < cfg.rows; ++r) o << (r ? ", " : "") << row_name(r);
  o << "}.\n";
  o << "col = {";
  for (int c = 0; c < cfg.cols; ++c) o << (c ? ", " : "") << col_name(c);
  o << "}.\n";
  o << "time = {" << join_objects(cfg.times) << "}.\n";
  o << "weather = {" << join_objects(cfg.weathers) << "}.\n";
  o << "\n";
  o << "curr_row : row.\n";
  o << "curr_col : col.\n";
  o << "curr_term : boolean.\n";
  o << "random(curr_row).\n";
  o << "random(curr_col).\n";
  o << "random(curr_term).\n";
  o << "curr_time : time.\n";
  o << "curr_weather : weather.\n";
  o << "\n";
  o << "near_window : row, col -> boolean.\n";
  for (auto [r, c] : cfg.near_window)
    o << "near_window(" << row_name(r) << ", " << col_name(c) << ").\n";
  o << "goal_cell : row, col -> boolean.\n";
  o << "goal_cell(" << row_name(cfg.goal.first) << ", "
    << col_name(cfg.goal.second) << ").\n";
  o << "blocked : row, col -> boolean.\n";
  o << "\n";
  o << "% near-window cells are under sunlight on sunny mornings unless the\n";
  o << "% default is defeated by an explicit -sunny fact\n";
  o << "sunny : row, col -> boolean.\n";
  o << "sunny(R, C) :- near_window(R, C), curr_time = " << cfg.default_time
    << ", curr_weather = " << cfg.default_weather << ", not -sunny(R, C).\n";
  return o.str();
}

std::string dynamics_text(const NavConfig& cfg) {
  std::ostringstream o;
  o << "% movement and termination distributions over successor attributes\n";
  o << "action = {up, down, left, right}.\n";
  o << "curr_a : action.\n";
  o << "random(curr_a).\n";
  o << "\n";
  o << "above : row, row -> boolean.\n";
  for (int r = 0; r + 1 < cfg.rows; ++r)
    o << "above(" << row_name(r) << ", " << row_name(r + 1) << ").\n";
  o << "leftof : col, col -> boolean.\n";
  for (int c = 0; c + 1 < cfg.cols; ++c)
    o << "leftof(" << col_name(c) << ", " << col_name(c + 1) << ").\n";
  o << R"(
has_above : row -> boolean.
has_above(R) :- above(R2, R).
has_below : row -> boolean.
has_below(R) :- above(R, R2).
has_left : col -> boolean.
has_left(C) :- leftof(C2, C).
has_right : col -> boolean.
has_right(C) :- leftof(C, C2).

% the cell the action aims at, clamped at the grid edge
target_row : row.
target_row = R :- curr_a = up, above(R, C), curr_row = C.
target_row = R :- curr_a = up, curr_row = R, not has_above(R).
target_row = R :- curr_a = down, above(C, R), curr_row = C.
target_row = R :- curr_a = down, curr_row = R, not has_below(R).
target_row = R :- curr_a = left, curr_row = R.
target_row = R :- curr_a = right, curr_row = R.
target_col : col.
target_col = C :- curr_a = left, leftof(C, D), curr_col = D.
target_col = C :- curr_a = left, curr_col = C, not has_left(C).
target_col = C :- curr_a = right, leftof(D, C), curr_col = D.
target_col = C :- curr_a = right, curr_col = C, not has_right(C).
target_col = C :- curr_a = up, curr_col = C.
target_col = C :- curr_a = down, curr_col = C.

moved_row : boolean.
moved_row :- target_row = R, curr_row = C, R != C.
moved_col : boolean.
moved_col :- target_col = C, curr_col = D, C != D.
can_move : boolean.
can_move :- moved_row, target_row = R, curr_col = C, not blocked(R, C).
can_move :- moved_col, curr_row = R, target_col = C, not blocked(R, C).
moving_row : boolean.
moving_row :- can_move, moved_row.
moving_col : boolean.
moving_col :- can_move, moved_col.

row_opt : row -> boolean.
row_opt(R) :- moving_row, target_row = R.
row_opt(R) :- curr_row = R.
col_opt : col -> boolean.
col_opt(C) :- moving_col, target_col = C.
col_opt(C) :- curr_col = C.

next_row : row.
random(next_row : {R : row_opt(R)}).
next_col : col.
random(next_col : {C : col_opt(C)}).
)";
  o << "pr(next_row = R | moving_row, target_row = R) = " << cfg.move_success
    << ".\n";
  o << "pr(next_row = R | moving_row, curr_row = R) = " << 1.0 - cfg.move_success
    << ".\n";
  o << "pr(next_col = C | moving_col, target_col = C) = " << cfg.move_success
    << ".\n";
  o << "pr(next_col = C | moving_col, curr_col = C) = " << 1.0 - cfg.move_success
    << ".\n";
  o << R"(
at_goal : boolean.
at_goal :- next_row = R, next_col = C, goal_cell(R, C).
in_sun : boolean.
in_sun :- curr_row = R, curr_col = C, sunny(R, C).

% termination: goal entry always ends the episode; occupying a sunny cell
% loses the robot with high probability
next_term : boolean.
random(next_term).
pr(next_term = true | curr_term) = 1.
pr(next_term = true | -curr_term, at_goal) = 1.
)";
  o << "pr(next_term = true | -curr_term, not at_goal, in_sun) = " << cfg.sun_loss
    << ".\n";
  o << "pr(next_term = false | -curr_term, not at_goal, in_sun) = "
    << 1.0 - cfg.sun_loss << ".\n";
  o << "pr(next_term = false | -curr_term, not at_goal, not in_sun) = 1.\n";
  return o.str();
}

nlohmann::json task_json(const NavConfig& cfg) {
  nlohmann::json j;
  j["name"] = "navigation";
  j["kind"] = "mdp";
  j["endogenous"] = {"curr_row", "curr_col", "curr_term", "sunny", "blocked"};
  j["exogenous"] = {"curr_time", "curr_weather"};
  j["defaults"] = {{"curr_time", cfg.default_time},
                   {"curr_weather", cfg.default_weather}};
  j["relevant"] = {"curr_row", "curr_col", "curr_term", "sunny", "blocked"};
  j["state_vars"] = {{{"curr", "curr_row"}, {"next", "next_row"}},
                     {{"curr", "curr_col"}, {"next", "next_col"}},
                     {{"curr", "curr_term"}, {"next", "next_term"}}};
  j["action_attr"] = "curr_a";
  j["actions"] = {"up", "down", "left", "right"};
  j["gamma"] = cfg.gamma;
  j["reward"] = {{"goal_reward", cfg.goal_reward},
                 {"fail_penalty", cfg.fail_penalty},
                 {"step_cost", cfg.step_cost}};
  return j;
}

}  // namespace

model::DomainBundle build_navigation_domain(const NavConfig& cfg) {
  validate(cfg);
  model::DomainBundle b;
  b.domain = domain_text(cfg);
  b.dynamics = dynamics_text(cfg);
  b.priors = "% the navigation task is fully observable; no priors needed\n";
  b.task = model::parse_task_spec(task_json(cfg));
  return b;
}

void write_navigation_domain(const NavConfig& cfg, const std::string& dir) {
  model::DomainBundle b = build_navigation_domain(cfg);
  std::filesystem::create_directories(dir);
  auto put = [&](const std::string& name, const std::string& text) {
    std::ofstream out(dir + "/" + name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + dir + "/" + name);
    out << text;
  };
  put("domain.plog", b.domain);
  put("dynamics.plog", b.dynamics);
  put("priors.plog", b.priors);
  put("task.json", task_json(cfg).dump(2) + "\n");
}

std::vector<NavStateInfo> navigation_states(const model::StateSpace& ss) {
  int i_row = -1, i_col = -1, i_term = -1;
  for (size_t a = 0; a < ss.attrs.size(); ++a) {
    if (ss.attrs[a] == "curr_row") i_row = ss.attr_first[a];
    if (ss.attrs[a] == "curr_col") i_col = ss.attr_first[a];
    if (ss.attrs[a] == "curr_term") i_term = ss.attr_first[a];
  }
  if (i_row < 0 || i_col < 0 || i_term < 0)
    throw std::runtime_error("state space lacks the navigation pose attributes");
  std::vector<NavStateInfo> out;
  out.reserve(ss.size());
  for (const auto& st : ss.states)
    out.push_back({st[i_row], st[i_col], st[i_term] != 0});
  return out;
}

std::vector<double> navigation_reward(const NavConfig& cfg,
                                      const model::StateSpace& ss,
                                      const model::Transitions& tr) {
  auto info = navigation_states(ss);
  const int S = ss.size(), A = tr.n_actions;
  std::vector<double> r(static_cast<size_t>(S) * A, 0.0);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) {
      double v = -cfg.step_cost;
      for (int s2 = 0; s2 < S; ++s2) {
        if (!info[s2].term || info[s].term) continue;
        double bonus = (info[s2].row == cfg.goal.first &&
                        info[s2].col == cfg.goal.second)
                           ? cfg.goal_reward
                           : -cfg.fail_penalty;
        v += tr.at(s, a, s2) * bonus;
      }
      r[static_cast<size_t>(s) * A + a] = v;
    }
  return r;
}

std::vector<uint8_t> navigation_terminal(const model::StateSpace& ss) {
  auto info = navigation_states(ss);
  std::vector<uint8_t> t(ss.size(), 0);
  for (int s = 0; s < ss.size(); ++s) t[s] = info[s].term ? 1 : 0;
  return t;
}

model::DecisionModel build_navigation_model(const NavConfig& cfg,
                                            const std::vector<std::string>& sensed) {
  model::DomainBundle b = build_navigation_domain(cfg);
  model::StateSpace ss = model::log_reason(b, sensed);
  model::Transitions tr = model::dyn_reason(b, sensed, ss);
  auto reward = navigation_reward(cfg, ss, tr);
  auto term = navigation_terminal(ss);
  return model::assemble_model(b.task, ss, tr, reward, term);
}

NavSimulator::NavSimulator(const NavConfig& cfg, uint64_t seed)
    : cfg_(cfg),
      rng_(seed),
      row_(cfg.start.first),
      col_(cfg.start.second),
      time_(cfg.default_time),
      weather_(cfg.default_weather) {
  validate(cfg_);
}

void NavSimulator::set_conditions(const std::string& time,
                                  const std::string& weather) {
  time_ = time;
  weather_ = weather;
}

void NavSimulator::relocate_walker(const std::vector<std::pair<int, int>>& path) {
  if (path.empty()) throw std::runtime_error("walker path must not be empty");
  for (auto c : path)
    if (c.first < 0 || c.first >= cfg_.rows || c.second < 0 ||
        c.second >= cfg_.cols)
      throw std::runtime_error("walker path leaves the grid");
  cfg_.walker_path = path;
  walker_at_ = 0;
  tick_ = 0;
}

bool NavSimulator::truly_sunny(int r, int c) const {
  if (time_ != cfg_.default_time || weather_ != cfg_.default_weather) return false;
  for (auto w : cfg_.near_window)
    if (w.first == r && w.second == c) return true;
  return false;
}

std::vector<std::string> NavSimulator::sense_facts() const {
  auto [wr, wc] = walker();
  return {"curr_time = " + time_, "curr_weather = " + weather_,
          "blocked(" + row_name(wr) + ", " + col_name(wc) + ")"};
}

NavSimulator::Outcome NavSimulator::step(const std::string& action) {
  if (term_) throw std::logic_error("the episode has already terminated");
  Outcome out;
  out.reward = -cfg_.step_cost;

  int tr = row_, tc = col_;
  if (action == "up")
    tr = std::max(0, row_ - 1);
  else if (action == "down")
    tr = std::min(cfg_.rows - 1, row_ + 1);
  else if (action == "left")
    tc = std::max(0, col_ - 1);
  else if (action == "right")
    tc = std::min(cfg_.cols - 1, col_ + 1);
  else
    throw std::logic_error("unknown action '" + action + "'");

  bool was_sunny = truly_sunny(row_, col_);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  auto [wr, wc] = walker();
  bool blocked = tr == wr && tc == wc;
  if (blocked && (tr != row_ || tc != col_)) out.bumped = true;
  bool moved = !blocked && (tr != row_ || tc != col_);
  if (moved && u(rng_) < cfg_.move_success) {
    row_ = tr;
    col_ = tc;
  }

  if (row_ == cfg_.goal.first && col_ == cfg_.goal.second) {
    term_ = true;
    out.reached_goal = true;
    out.reward += cfg_.goal_reward;
  } else if (was_sunny && u(rng_) < cfg_.sun_loss) {
    term_ = true;
    out.lost = true;
    out.reward -= cfg_.fail_penalty;
  }
  out.terminated = term_;

  ++tick_;
  if (tick_ % cfg_.walker_period == 0)
    walker_at_ = (walker_at_ + 1) % static_cast<int>(cfg_.walker_path.size());
  return out;
}

}  // namespace kbplan::domains
