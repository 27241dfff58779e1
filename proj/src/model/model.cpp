#include "kbplan/model/model.hpp"

#include <algorithm>
#include <cstring>

namespace kbplan::model {

int StateSpace::find(const std::vector<int16_t>& v) const {
  auto it = std::lower_bound(states.begin(), states.end(), v);
  if (it == states.end() || *it != v) return -1;
  return static_cast<int>(it - states.begin());
}

namespace {

struct Fnv64 {
  uint64_t h = 1469598103934665603ull;
  void bytes(const void* p, size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ull;
    }
  }
  void u64(uint64_t v) { bytes(&v, sizeof v); }
  void num(double v) {
    uint64_t u;
    std::memcpy(&u, &v, sizeof u);
    u64(u);
  }
  void str(const std::string& s) {
    u64(s.size());
    bytes(s.data(), s.size());
  }
  void nums(const std::vector<double>& v) {
    u64(v.size());
    for (double d : v) num(d);
  }
  void strs(const std::vector<std::string>& v) {
    u64(v.size());
    for (const auto& s : v) str(s);
  }
};

}  // namespace

uint64_t DecisionModel::fingerprint() const {
  Fnv64 f;
  f.u64(pomdp ? 1 : 0);
  f.u64(static_cast<uint64_t>(n_states));
  f.u64(static_cast<uint64_t>(n_actions));
  f.u64(static_cast<uint64_t>(n_obs));
  f.strs(state_names);
  f.strs(action_names);
  f.strs(obs_names);
  f.nums(trans);
  f.nums(reward);
  f.nums(obs);
  f.u64(terminal.size());
  f.bytes(terminal.data(), terminal.size());
  f.nums(prior);
  f.num(gamma);
  return f.h;
}

}  // namespace kbplan::model
