#pragma once
// Shopping-request dialog world: a person asks for an item delivered to a
// room, the robot asks clarifying questions under observation noise and
// finally commits to a delivery.  The hidden request is the POMDP state;
// question actions leave it unchanged, deliveries end the episode.

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "kbplan/model/build.hpp"
#include "kbplan/model/bundle.hpp"
#include "kbplan/model/model.hpp"

namespace kbplan::domains {

// Rooted class tree over items.  Leaves are deliverable items; inner nodes
// group them (used for closeness and for class-level priors).
struct Ontology {
  std::vector<std::pair<std::string, std::string>> edges;  // (child, parent)

  static Ontology standard();  // 6 leaves under item -> {drink, food}

  bool has(const std::string& node) const;
  std::vector<std::string> leaves() const;           // declaration order
  std::vector<std::string> path_to_root(const std::string& node) const;
  std::vector<std::string> leaves_under(const std::string& cls) const;
};

// Closeness of two leaves: 1 at identity, shrinking with the distance to
// their lowest common ancestor relative to the deeper leaf.
double item_closeness(const Ontology& ont, const std::string& i1,
                      const std::string& i2);

// Asymmetric room closeness from the per-room shop distances:
// dis(r2) / (2*dis(r1) + dis(r2)); exactly 1/3 when r1 == r2.
double room_closeness(const std::map<std::string, double>& dis,
                      const std::string& r1, const std::string& r2);

struct DialogPerson {
  std::string name;
  bool prof = false;  // otherwise a student
  bool paid = false;
  bool registered = false;
  std::string place;  // room the person sits in
};

struct DialogConfig {
  Ontology ontology = Ontology::standard();
  std::vector<std::string> items;        // leaves in play; empty = all leaves
  std::vector<std::string> unavailable;  // currently out of stock
  std::vector<std::string> rooms{"r0", "r1", "r2"};
  std::map<std::string, double> dis{{"r0", 1.0}, {"r1", 2.0}, {"r2", 3.0}};
  std::vector<DialogPerson> persons{{"alice", true, true, false, "r0"},
                                    {"bob", false, false, true, "r1"}};
  std::vector<std::string> times{"morning", "noon", "afternoon"};
  // Assumed when no time is sensed; empty = marginalise over all times.
  std::string default_time = "morning";

  double confirm_acc = 0.8;
  // wh-question accuracy over a sort with n values:
  // max(wh_floor, wh_base - wh_slope*(n-2)); always correct when n == 1
  double wh_base = 0.9;
  double wh_slope = 0.05;
  double wh_floor = 0.5;

  bool flat_reward = true;
  double r_w = 1.0;        // wh-question cost
  double r_p = 2.0;        // confirmation cost
  double r_dplus = 50.0;   // flat-scheme correct delivery
  double r_dminus = 100.0; // flat-scheme wrong-delivery penalty
  double r_plus = 20.0;    // closeness-scheme correct delivery
  double r_minus = -20.0;  // closeness-scheme mistake scale (negative)

  // Class-level prior: mass spread uniformly over the class's leaves when
  // the current time matches (e.g. coffee in the morning).
  std::string prior_class = "coffee";
  std::string prior_time = "morning";
  double prior_mass = 0.8;
  // Optional: pr(req_room = R | req_person = P, place(P, R)); 0 disables.
  double place_prior = 0.0;

  double gamma = 0.95;
};

double wh_accuracy(const DialogConfig& cfg, int n_values);

struct RequestTriple {
  std::string item, room, person;
  bool operator==(const RequestTriple&) const = default;
};

// Reward for delivering `a` when `s` was requested, under the configured
// scheme (flat match/mismatch or ontology closeness with lambda_p = 1).
double delivery_reward(const DialogConfig& cfg, const RequestTriple& s,
                       const RequestTriple& a);

// Knowledge bundle: request selections with availability/authorization
// qualifiers, the authorization defaults, and the class-level priors.
model::DomainBundle build_dialog_domain(const DialogConfig& cfg);
void write_dialog_domain(const DialogConfig& cfg, const std::string& dir);

// The assembled POMDP plus its vocabulary.  Actions are named ask_item /
// ask_room / ask_person, confirm_<value>, deliver_<item>_<room>_<person>;
// observations are the value names plus yes/no.  The final state is the
// synthetic terminal reached by every delivery.
struct DialogModelParts {
  model::StateSpace ss;  // request states, without the terminal
  std::vector<RequestTriple> requests;       // per non-terminal state
  std::vector<std::string> items, rooms, persons;  // values present in ss
  std::vector<std::string> actions;
  int n_questions = 0;  // actions[0..n_questions) are questions
  std::vector<std::string> observations;
  model::DecisionModel m;
  std::string counting_note;  // both state-count conventions, spelled out
};

DialogModelParts build_dialog_model(const DialogConfig& cfg,
                                    const std::vector<std::string>& sensed);

// Ground truth: answers questions about the hidden request with the same
// noise model the POMDP declares.  Deterministic given (config, seed).
class DialogSimulator {
 public:
  DialogSimulator(const DialogConfig& cfg, uint64_t seed);

  void set_request(const RequestTriple& r);
  const RequestTriple& request() const { return req_; }

  // Observation name for a question action; throws std::logic_error when
  // handed a delivery action (deliveries produce rewards, not answers).
  std::string respond(const std::string& action);
  // Ends the episode and returns the delivery reward.
  double deliver(const std::string& action);
  bool done() const { return done_; }

 private:
  std::string wh_answer(const std::string& truth,
                        const std::vector<std::string>& values);

  DialogConfig cfg_;
  std::mt19937_64 rng_;
  std::vector<std::string> items_, rooms_, persons_;  // candidate values
  RequestTriple req_;
  bool done_ = false;
};

// Scenario presets.
DialogConfig dialog_paper_small();  // 2 items x 1 room x 2 persons
DialogConfig dialog_paper_full();   // 6 items x 3 rooms x 2 persons
DialogConfig dialog_tuning();       // 4 items x 3 rooms x 2 persons, closeness rewards

}  // namespace kbplan::domains
