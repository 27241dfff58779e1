#pragma once
// A domain bundle is a directory holding the knowledge base split into
// domain.plog (static rules), dynamics.plog (transition rules), priors.plog
// (probabilistic defaults) and task.json (variable partition + task data).
// The rule files are kept as text because they only parse concatenated:
// dynamics and priors reference sorts declared in domain.plog.

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "vendor/json.hpp"

namespace kbplan::model {

struct TaskSpec {
  std::string name;
  std::string kind;  // "mdp" or "pomdp"
  std::vector<std::string> endogenous;
  std::vector<std::string> exogenous;
  std::map<std::string, std::string> defaults;   // exogenous attr -> value
  std::vector<std::string> relevant;             // projection attributes
  // Current-state attribute paired with its successor attribute in the
  // transition rules; attrs in `relevant` but not here are static context.
  std::vector<std::pair<std::string, std::string>> state_vars;
  std::string action_attr;
  std::vector<std::string> actions;
  double gamma = 0.95;
  nlohmann::json reward;       // domain-specific reward parameters
  nlohmann::json observation;  // observation parameters, null for MDPs
};

struct DomainBundle {
  std::string domain;    // contents of domain.plog
  std::string dynamics;  // contents of dynamics.plog
  std::string priors;    // contents of priors.plog
  TaskSpec task;
};

// Reads the four bundle files from `dir`.  Throws std::runtime_error on
// missing files or malformed JSON.
DomainBundle load_bundle(const std::string& dir);

TaskSpec parse_task_spec(const nlohmann::json& j);

}  // namespace kbplan::model
