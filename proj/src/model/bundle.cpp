#include "kbplan/model/bundle.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace kbplan::model {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

}  // namespace

TaskSpec parse_task_spec(const nlohmann::json& j) {
  TaskSpec t;
  t.name = j.at("name").get<std::string>();
  t.kind = j.at("kind").get<std::string>();
  if (t.kind != "mdp" && t.kind != "pomdp")
    throw std::runtime_error("task kind must be 'mdp' or 'pomdp', got '" + t.kind + "'");
  t.endogenous = j.at("endogenous").get<std::vector<std::string>>();
  t.exogenous = j.at("exogenous").get<std::vector<std::string>>();
  if (j.contains("defaults"))
    t.defaults = j.at("defaults").get<std::map<std::string, std::string>>();
  t.relevant = j.at("relevant").get<std::vector<std::string>>();
  for (const auto& sv : j.value("state_vars", nlohmann::json::array()))
    t.state_vars.emplace_back(sv.at("curr").get<std::string>(),
                              sv.at("next").get<std::string>());
  t.action_attr = j.value("action_attr", std::string{});
  t.actions = j.at("actions").get<std::vector<std::string>>();
  t.gamma = j.value("gamma", 0.95);
  t.reward = j.value("reward", nlohmann::json::object());
  t.observation = j.value("observation", nlohmann::json());

  for (const auto& [attr, val] : t.defaults) {
    bool known = false;
    for (const auto& e : t.exogenous) known = known || e == attr;
    if (!known)
      throw std::runtime_error("default for '" + attr + "' names no exogenous attribute");
    (void)val;
  }
  for (const auto& [curr, next] : t.state_vars) {
    bool known = false;
    for (const auto& r : t.relevant) known = known || r == curr;
    if (!known)
      throw std::runtime_error("state variable '" + curr + "' (-> '" + next +
                               "') is not listed as relevant");
  }
  return t;
}

DomainBundle load_bundle(const std::string& dir) {
  DomainBundle b;
  b.domain = read_file(dir + "/domain.plog");
  b.dynamics = read_file(dir + "/dynamics.plog");
  b.priors = read_file(dir + "/priors.plog");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(dir + "/task.json"));
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(dir + "/task.json: " + e.what());
  }
  b.task = parse_task_spec(j);
  return b;
}

}  // namespace kbplan::model
