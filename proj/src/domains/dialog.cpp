#include "kbplan/domains/dialog.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace kbplan::domains {

// --- ontology ----------------------------------------------------------------

Ontology Ontology::standard() {
  Ontology o;
  o.edges = {{"drink", "item"},   {"food", "item"},     {"coffee", "drink"},
             {"soda", "drink"},   {"juice", "drink"},   {"regular", "coffee"},
             {"decaf", "coffee"}, {"sandwich", "food"}, {"cookie", "food"}};
  return o;
}

bool Ontology::has(const std::string& node) const {
  for (const auto& [c, p] : edges)
    if (c == node || p == node) return true;
  return false;
}

std::vector<std::string> Ontology::leaves() const {
  std::vector<std::string> out;
  for (const auto& [c, p] : edges) {
    (void)p;
    bool parent = false;
    for (const auto& [c2, p2] : edges) {
      (void)c2;
      if (p2 == c) parent = true;
    }
    if (!parent) out.push_back(c);
  }
  return out;
}

std::vector<std::string> Ontology::path_to_root(const std::string& node) const {
  if (!has(node)) throw std::runtime_error("unknown ontology node '" + node + "'");
  std::vector<std::string> path{node};
  std::string cur = node;
  for (size_t guard = 0; guard <= edges.size(); ++guard) {
    bool found = false;
    for (const auto& [c, p] : edges)
      if (c == cur) {
        cur = p;
        path.push_back(cur);
        found = true;
        break;
      }
    if (!found) return path;  // reached the root
  }
  throw std::runtime_error("ontology contains a cycle through '" + node + "'");
}

std::vector<std::string> Ontology::leaves_under(const std::string& cls) const {
  std::vector<std::string> out;
  for (const auto& leaf : leaves()) {
    auto path = path_to_root(leaf);
    if (std::find(path.begin(), path.end(), cls) != path.end()) out.push_back(leaf);
  }
  return out;
}

double item_closeness(const Ontology& ont, const std::string& i1,
                      const std::string& i2) {
  auto p1 = ont.path_to_root(i1);
  auto p2 = ont.path_to_root(i2);
  int lca1 = -1, lca2 = -1;
  for (size_t a = 0; a < p1.size() && lca1 < 0; ++a)
    for (size_t b = 0; b < p2.size(); ++b)
      if (p1[a] == p2[b]) {
        lca1 = static_cast<int>(a);
        lca2 = static_cast<int>(b);
        break;
      }
  if (lca1 < 0) throw std::runtime_error("'" + i1 + "' and '" + i2 +
                                         "' share no ontology root");
  // dep counts nodes inclusively: position of the LCA on each path + 1
  int num = std::max(lca1, lca2);  // max(dep(lca,i1), dep(lca,i2)) - 1
  int den = static_cast<int>(std::max(p1.size(), p2.size()));
  return 1.0 - static_cast<double>(num) / den;
}

double room_closeness(const std::map<std::string, double>& dis,
                      const std::string& r1, const std::string& r2) {
  auto a = dis.find(r1);
  auto b = dis.find(r2);
  if (a == dis.end() || b == dis.end())
    throw std::runtime_error("no shop distance for room '" +
                             (a == dis.end() ? r1 : r2) + "'");
  if (a->second <= 0.0 || b->second <= 0.0)
    throw std::runtime_error("room distances must be positive");
  return b->second / (2.0 * a->second + b->second);
}

double wh_accuracy(const DialogConfig& cfg, int n_values) {
  if (n_values <= 1) return 1.0;
  return std::max(cfg.wh_floor, cfg.wh_base - cfg.wh_slope * (n_values - 2));
}

double delivery_reward(const DialogConfig& cfg, const RequestTriple& s,
                       const RequestTriple& a) {
  bool match = s == a;
  if (cfg.flat_reward) return match ? cfg.r_dplus : -cfg.r_dminus;
  if (match) return cfg.r_plus;
  double li = item_closeness(cfg.ontology, s.item, a.item);
  // Room closeness is asymmetric: the delivered room comes first, since the
  // penalty tracks the effort of recovering from where the item ended up.
  double lr = room_closeness(cfg.dis, a.room, s.room);
  return (1.0 - li * 1.0 * lr) * cfg.r_minus;  // lambda_p is fixed to 1
}

// --- config ------------------------------------------------------------------

namespace {

bool is_authorized(const DialogPerson& p) {
  return p.prof ? p.paid : p.registered;
}

DialogConfig normalized(DialogConfig cfg) {
  if (cfg.items.empty()) cfg.items = cfg.ontology.leaves();
  return cfg;
}

void validate(const DialogConfig& cfg) {
  if (cfg.items.empty()) throw std::runtime_error("no items configured");
  for (const auto& i : cfg.items) {
    auto lv = cfg.ontology.leaves();
    if (std::find(lv.begin(), lv.end(), i) == lv.end())
      throw std::runtime_error("item '" + i + "' is not an ontology leaf");
  }
  for (const auto& u : cfg.unavailable)
    if (std::find(cfg.items.begin(), cfg.items.end(), u) == cfg.items.end())
      throw std::runtime_error("unavailable item '" + u + "' is not in play");
  if (cfg.rooms.empty()) throw std::runtime_error("no rooms configured");
  for (const auto& r : cfg.rooms) {
    auto it = cfg.dis.find(r);
    if (it == cfg.dis.end() || it->second <= 0.0)
      throw std::runtime_error("room '" + r + "' needs a positive shop distance");
  }
  if (cfg.persons.empty()) throw std::runtime_error("no persons configured");
  bool any_auth = false;
  for (const auto& p : cfg.persons) {
    if (std::find(cfg.rooms.begin(), cfg.rooms.end(), p.place) == cfg.rooms.end())
      throw std::runtime_error("person '" + p.name + "' placed in unknown room '" +
                               p.place + "'");
    any_auth = any_auth || is_authorized(p);
  }
  if (!any_auth) throw std::runtime_error("no person is authorized to request");
  if (cfg.confirm_acc <= 0.0 || cfg.confirm_acc > 1.0)
    throw std::runtime_error("confirmation accuracy must lie in (0,1]");
  if (cfg.prior_mass < 0.0 || cfg.prior_mass > 1.0)
    throw std::runtime_error("class prior mass must lie in [0,1]");
  if (cfg.prior_mass > 0.0 && !cfg.ontology.has(cfg.prior_class))
    throw std::runtime_error("prior class '" + cfg.prior_class +
                             "' is not in the ontology");
  if (cfg.gamma <= 0.0 || cfg.gamma >= 1.0)
    throw std::runtime_error("gamma must lie in (0,1)");
  // observation names must be unambiguous
  std::set<std::string> vocab{"yes", "no"};
  auto add = [&](const std::string& v) {
    if (!vocab.insert(v).second)
      throw std::runtime_error("value name '" + v + "' is ambiguous across sorts");
  };
  for (const auto& i : cfg.items) add(i);
  for (const auto& r : cfg.rooms) add(r);
  for (const auto& p : cfg.persons) add(p.name);
}

std::string num(double v) {
  for (int prec = 6; prec <= 17; ++prec) {
    std::ostringstream o;
    o.precision(prec);
    o << v;
    if (std::stod(o.str()) == v) return o.str();
  }
  return std::to_string(v);
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) {
    if (!out.empty()) out += ", ";
    out += s;
  }
  return out;
}

std::string domain_text(const DialogConfig& cfg) {
  std::ostringstream o;
  o << "% request-dialog knowledge: stock, authorization, seating\n";
  o << "item = {" << join(cfg.items) << "}.\n";
  o << "room = {" << join(cfg.rooms) << "}.\n";
  std::vector<std::string> pnames;
  for (const auto& p : cfg.persons) pnames.push_back(p.name);
  o << "person = {" << join(pnames) << "}.\n";
  o << "time = {" << join(cfg.times) << "}.\n";
  o << "curr_time : time.\n";
  o << R"(
prof : person -> boolean.
student : person -> boolean.
paid : person -> boolean.
registered : person -> boolean.
)";
  for (const auto& p : cfg.persons) {
    o << (p.prof ? "prof(" : "student(") << p.name << ").\n";
    if (p.paid) o << "paid(" << p.name << ").\n";
    if (p.registered) o << "registered(" << p.name << ").\n";
  }
  o << R"(
% professors request on a paid account, students on a registration;
% anything not known to be paid or registered is assumed not to be
authorized : person -> boolean.
authorized(P) :- prof(P), paid(P).
authorized(P) :- student(P), registered(P).
-paid(P) :- prof(P), not paid(P).
-registered(P) :- student(P), not registered(P).
-authorized(P) :- not authorized(P).

% items are in stock unless stated otherwise
available : item -> boolean.
available(I) :- not -available(I).

place : person, room -> boolean.
)";
  for (const auto& p : cfg.persons) o << "place(" << p.name << ", " << p.place << ").\n";
  o << R"(
req_item : item.
req_room : room.
req_person : person.
random(req_item : {I : available(I)}).
random(req_room).
random(req_person : {P : authorized(P)}).
task : item, room, person -> boolean.
task(I, R, P) :- req_item = I, req_room = R, req_person = P.
)";
  return o.str();
}

std::string priors_text(const DialogConfig& cfg) {
  std::ostringstream o;
  o << "% commonsense priors over the hidden request\n";
  if (cfg.prior_mass > 0.0) {
    std::vector<std::string> pref;
    for (const auto& leaf : cfg.ontology.leaves_under(cfg.prior_class))
      if (std::find(cfg.items.begin(), cfg.items.end(), leaf) != cfg.items.end())
        pref.push_back(leaf);
    if (!pref.empty()) {
      o << "preferred : item -> boolean.\n";
      for (const auto& p : pref) o << "preferred(" << p << ").\n";
      o << "pr(req_item = I | preferred(I), curr_time = " << cfg.prior_time
        << ") = " << num(cfg.prior_mass / static_cast<double>(pref.size()))
        << ".\n";
    }
  }
  if (cfg.place_prior > 0.0)
    o << "pr(req_room = R | req_person = P, place(P, R)) = "
      << num(cfg.place_prior) << ".\n";
  return o.str();
}

nlohmann::json task_json(const DialogConfig& cfg);

// Values actually requestable under the configuration, host-side.
struct Vocab {
  std::vector<std::string> items, rooms, persons;
};

Vocab vocab_for(const DialogConfig& cfg) {
  Vocab v;
  for (const auto& i : cfg.items)
    if (std::find(cfg.unavailable.begin(), cfg.unavailable.end(), i) ==
        cfg.unavailable.end())
      v.items.push_back(i);
  v.rooms = cfg.rooms;
  for (const auto& p : cfg.persons)
    if (is_authorized(p)) v.persons.push_back(p.name);
  return v;
}

std::vector<std::string> actions_for(const Vocab& v, int* n_questions) {
  std::vector<std::string> a{"ask_item", "ask_room", "ask_person"};
  for (const auto& i : v.items) a.push_back("confirm_" + i);
  for (const auto& r : v.rooms) a.push_back("confirm_" + r);
  for (const auto& p : v.persons) a.push_back("confirm_" + p);
  if (n_questions) *n_questions = static_cast<int>(a.size());
  for (const auto& i : v.items)
    for (const auto& r : v.rooms)
      for (const auto& p : v.persons) a.push_back("deliver_" + i + "_" + r + "_" + p);
  return a;
}

nlohmann::json task_json(const DialogConfig& cfg) {
  nlohmann::json j;
  j["name"] = "dialog";
  j["kind"] = "pomdp";
  j["endogenous"] = {"req_item", "req_room", "req_person", "task",
                     "authorized", "available"};
  j["exogenous"] = {"curr_time"};
  // An empty default leaves curr_time undefaulted, so builds without a
  // sensed time marginalise over the whole sort instead of assuming one.
  if (cfg.default_time.empty())
    j["defaults"] = nlohmann::json::object();
  else
    j["defaults"] = {{"curr_time", cfg.default_time}};
  j["relevant"] = {"req_item", "req_room", "req_person"};
  j["state_vars"] = nlohmann::json::array();
  j["actions"] = actions_for(vocab_for(cfg), nullptr);
  j["gamma"] = cfg.gamma;
  j["reward"] = {{"scheme", cfg.flat_reward ? "flat" : "closeness"},
                 {"r_w", cfg.r_w},
                 {"r_p", cfg.r_p},
                 {"r_dplus", cfg.r_dplus},
                 {"r_dminus", cfg.r_dminus},
                 {"r_plus", cfg.r_plus},
                 {"r_minus", cfg.r_minus}};
  j["observation"] = {{"confirm_acc", cfg.confirm_acc},
                      {"wh_base", cfg.wh_base},
                      {"wh_slope", cfg.wh_slope},
                      {"wh_floor", cfg.wh_floor}};
  return j;
}

RequestTriple decode_state_name(const std::string& name) {
  // "req_item=regular,req_room=r0,req_person=alice"
  RequestTriple t;
  std::istringstream in(name);
  std::string part;
  while (std::getline(in, part, ',')) {
    auto eq = part.find('=');
    if (eq == std::string::npos) continue;
    std::string attr = part.substr(0, eq), val = part.substr(eq + 1);
    if (attr == "req_item") t.item = val;
    if (attr == "req_room") t.room = val;
    if (attr == "req_person") t.person = val;
  }
  if (t.item.empty() || t.room.empty() || t.person.empty())
    throw std::runtime_error("state '" + name + "' is not a full request");
  return t;
}

}  // namespace

model::DomainBundle build_dialog_domain(const DialogConfig& cfg0) {
  DialogConfig cfg = normalized(cfg0);
  validate(cfg);
  model::DomainBundle b;
  b.domain = domain_text(cfg);
  b.dynamics =
      "% question actions leave the request unchanged and deliveries end the\n"
      "% episode; the controller builds that table directly\n";
  b.priors = priors_text(cfg);
  b.task = model::parse_task_spec(task_json(cfg));
  return b;
}

void write_dialog_domain(const DialogConfig& cfg0, const std::string& dir) {
  DialogConfig cfg = normalized(cfg0);
  model::DomainBundle b = build_dialog_domain(cfg);
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

DialogModelParts build_dialog_model(const DialogConfig& cfg0,
                                    const std::vector<std::string>& sensed0) {
  DialogConfig cfg = normalized(cfg0);
  validate(cfg);
  model::DomainBundle b = build_dialog_domain(cfg);

  std::vector<std::string> sensed = sensed0;
  for (const auto& u : cfg.unavailable) sensed.push_back("-available(" + u + ")");

  DialogModelParts parts;
  parts.ss = model::log_reason(b, sensed);
  model::PriorBelief prior = model::prob_reason(b, sensed, parts.ss);

  for (const auto& name : parts.ss.names)
    parts.requests.push_back(decode_state_name(name));

  Vocab v = vocab_for(cfg);
  parts.items = v.items;
  parts.rooms = v.rooms;
  parts.persons = v.persons;
  parts.actions = actions_for(v, &parts.n_questions);

  // The reasoner's admissible requests and the host-side vocabulary must
  // agree, or the authorization/availability encodings have diverged.
  {
    std::vector<RequestTriple> expect;
    for (const auto& i : v.items)
      for (const auto& r : v.rooms)
        for (const auto& p : v.persons) expect.push_back({i, r, p});
    if (expect.size() != parts.requests.size())
      throw std::runtime_error("reasoned request set does not match the "
                               "host-side vocabulary");
    for (size_t k = 0; k < expect.size(); ++k)
      if (!(expect[k] == parts.requests[k]))
        throw std::runtime_error("reasoned request order does not match the "
                                 "host-side vocabulary");
  }

  for (const auto& i : v.items) parts.observations.push_back(i);
  for (const auto& r : v.rooms) parts.observations.push_back(r);
  for (const auto& p : v.persons) parts.observations.push_back(p);
  parts.observations.push_back("yes");
  parts.observations.push_back("no");

  const int n = parts.ss.size();
  const int S = n + 1;  // synthetic terminal last
  const int A = static_cast<int>(parts.actions.size());
  const int Z = static_cast<int>(parts.observations.size());
  const int term = n;

  model::StateSpace ext = parts.ss;
  ext.states.emplace_back(parts.ss.insts.size(), static_cast<int16_t>(-1));
  ext.names.push_back("term");

  model::Transitions tr;
  tr.n_states = S;
  tr.n_actions = A;
  tr.t.assign(static_cast<size_t>(S) * A * S, 0.0);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) {
      int s2 = a < parts.n_questions ? s : term;
      tr.at(s, a, s2) = 1.0;
    }

  std::vector<double> reward(static_cast<size_t>(S) * A, 0.0);
  for (int s = 0; s < n; ++s)
    for (int a = 0; a < A; ++a) {
      double r;
      if (a < 3)
        r = -cfg.r_w;
      else if (a < parts.n_questions)
        r = -cfg.r_p;
      else
        // delivery a enumerates item x room x person in state order
        r = delivery_reward(cfg, parts.requests[s],
                            parts.requests[a - parts.n_questions]);
      reward[static_cast<size_t>(s) * A + a] = r;
    }

  std::vector<double> obs(static_cast<size_t>(S) * A * Z, 0.0);
  auto O = [&](int s2, int a, int z) -> double& {
    return obs[(static_cast<size_t>(s2) * A + a) * Z + z];
  };
  int item_base = 0;
  int room_base = static_cast<int>(v.items.size());
  int person_base = room_base + static_cast<int>(v.rooms.size());
  int z_yes = Z - 2, z_no = Z - 1;
  auto index_of = [](const std::vector<std::string>& vals, const std::string& x) {
    return static_cast<int>(std::find(vals.begin(), vals.end(), x) - vals.begin());
  };
  for (int s2 = 0; s2 < S; ++s2)
    for (int a = 0; a < A; ++a) {
      if (s2 == term || a >= parts.n_questions) {
        for (int z = 0; z < Z; ++z) O(s2, a, z) = 1.0 / Z;
        continue;
      }
      const RequestTriple& rq = parts.requests[s2];
      const std::string& name = parts.actions[a];
      if (a < 3) {
        const std::vector<std::string>& vals =
            a == 0 ? v.items : (a == 1 ? v.rooms : v.persons);
        int base = a == 0 ? item_base : (a == 1 ? room_base : person_base);
        const std::string& truth =
            a == 0 ? rq.item : (a == 1 ? rq.room : rq.person);
        double acc = wh_accuracy(cfg, static_cast<int>(vals.size()));
        int ti = index_of(vals, truth);
        for (size_t k = 0; k < vals.size(); ++k)
          O(s2, a, base + static_cast<int>(k)) =
              static_cast<int>(k) == ti
                  ? acc
                  : (1.0 - acc) / static_cast<double>(vals.size() - 1);
        if (vals.size() == 1) O(s2, a, base) = 1.0;
      } else {
        std::string val = name.substr(std::string("confirm_").size());
        bool match = val == rq.item || val == rq.room || val == rq.person;
        O(s2, a, z_yes) = match ? cfg.confirm_acc : 1.0 - cfg.confirm_acc;
        O(s2, a, z_no) = 1.0 - O(s2, a, z_yes);
      }
    }

  std::vector<uint8_t> term_flags(S, 0);
  term_flags[term] = 1;
  prior.push_back(0.0);

  model::TaskSpec spec = b.task;
  spec.actions = parts.actions;
  parts.m = model::assemble_model(spec, ext, tr, reward, term_flags,
                                  parts.observations, obs, prior);
  parts.counting_note =
      "request combinations: " + std::to_string(n) +
      "; including the terminal state: " + std::to_string(S);
  return parts;
}

// --- simulator ---------------------------------------------------------------

DialogSimulator::DialogSimulator(const DialogConfig& cfg0, uint64_t seed)
    : cfg_(normalized(cfg0)), rng_(seed) {
  validate(cfg_);
  Vocab v = vocab_for(cfg_);
  items_ = v.items;
  rooms_ = v.rooms;
  persons_ = v.persons;
  if (!items_.empty() && !rooms_.empty() && !persons_.empty())
    req_ = {items_[0], rooms_[0], persons_[0]};
}

void DialogSimulator::set_request(const RequestTriple& r) {
  req_ = r;
  done_ = false;
}

std::string DialogSimulator::wh_answer(const std::string& truth,
                                       const std::vector<std::string>& values) {
  double acc = wh_accuracy(cfg_, static_cast<int>(values.size()));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (values.size() <= 1 || u(rng_) < acc) return truth;
  std::uniform_int_distribution<int> pick(0, static_cast<int>(values.size()) - 2);
  int k = pick(rng_);
  for (const auto& val : values) {
    if (val == truth) continue;
    if (k-- == 0) return val;
  }
  return truth;  // unreachable
}

std::string DialogSimulator::respond(const std::string& action) {
  if (done_) throw std::logic_error("the dialog has already ended");
  if (action.rfind("deliver_", 0) == 0)
    throw std::logic_error("observation requested for a delivery action");
  if (action == "ask_item") return wh_answer(req_.item, items_);
  if (action == "ask_room") return wh_answer(req_.room, rooms_);
  if (action == "ask_person") return wh_answer(req_.person, persons_);
  if (action.rfind("confirm_", 0) == 0) {
    std::string val = action.substr(std::string("confirm_").size());
    bool match = val == req_.item || val == req_.room || val == req_.person;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    bool truthful = u(rng_) < cfg_.confirm_acc;
    return (match == truthful) ? "yes" : "no";
  }
  throw std::logic_error("unknown question action '" + action + "'");
}

double DialogSimulator::deliver(const std::string& action) {
  if (done_) throw std::logic_error("the dialog has already ended");
  if (action.rfind("deliver_", 0) != 0)
    throw std::logic_error("'" + action + "' is not a delivery action");
  std::string rest = action.substr(std::string("deliver_").size());
  auto u1 = rest.find('_');
  auto u2 = rest.rfind('_');
  if (u1 == std::string::npos || u2 == u1)
    throw std::logic_error("malformed delivery action '" + action + "'");
  RequestTriple del{rest.substr(0, u1), rest.substr(u1 + 1, u2 - u1 - 1),
                    rest.substr(u2 + 1)};
  done_ = true;
  return delivery_reward(cfg_, req_, del);
}

// --- presets -----------------------------------------------------------------

DialogConfig dialog_paper_small() {
  DialogConfig cfg;
  cfg.items = {"regular", "decaf"};
  cfg.rooms = {"r0"};
  cfg.dis = {{"r0", 1.0}};
  cfg.persons = {{"alice", true, true, false, "r0"},
                 {"bob", false, false, true, "r0"}};
  return cfg;
}

DialogConfig dialog_paper_full() { return DialogConfig{}; }

DialogConfig dialog_tuning() {
  DialogConfig cfg;
  cfg.items = {"regular", "decaf", "soda", "cookie"};
  cfg.flat_reward = false;
  cfg.r_plus = 20.0;
  cfg.r_minus = -20.0;
  return cfg;
}

}  // namespace kbplan::domains
