#include "kbplan/plog/ground.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace kbplan::plog {

namespace {

struct Builder {
  const Program& prog;
  GroundProgram gp;
  std::map<std::string, int> sort_ids;
  std::map<std::string, int> attr_ids;
  std::map<std::pair<std::string, std::vector<int>>, int> inst_ids;
  int n_nodes = 0;

  explicit Builder(const Program& p) : prog(p) {}

  void intern_decls() {
    gp.sorts.push_back({"boolean", {"false", "true"}});
    sort_ids["boolean"] = 0;
    for (const auto& s : prog.sorts) {
      sort_ids[s.name] = static_cast<int>(gp.sorts.size());
      gp.sorts.push_back({s.name, s.objects});
    }
    for (const auto& a : prog.attrs) {
      GroundProgram::AttrInfo ai;
      ai.name = a.name;
      for (const auto& s : a.arg_sorts) ai.arg_sorts.push_back(sort_ids.at(s));
      ai.range_sort = sort_ids.at(a.range);
      ai.first_inst = static_cast<int>(gp.insts.size());
      // enumerate argument tuples row-major
      std::vector<int> dims;
      size_t total = 1;
      for (int sid : ai.arg_sorts) {
        dims.push_back(static_cast<int>(gp.sorts[sid].objects.size()));
        total *= gp.sorts[sid].objects.size();
      }
      if (total > 200000) throw SemanticError("attribute '" + a.name + "' grounds too large");
      std::vector<int> idx(dims.size(), 0);
      for (size_t k = 0; k < total; ++k) {
        GroundProgram::InstInfo ii;
        ii.attr = static_cast<int>(gp.attrs.size());
        ii.args = idx;
        ii.n_values = static_cast<int>(gp.sorts[ai.range_sort].objects.size());
        ii.is_boolean = ai.range_sort == 0;
        ii.node_base = n_nodes;
        n_nodes += ii.n_values;
        ii.label = a.name;
        if (!idx.empty()) {
          ii.label += '(';
          for (size_t j = 0; j < idx.size(); ++j) {
            if (j) ii.label += ',';
            ii.label += gp.sorts[ai.arg_sorts[j]].objects[idx[j]];
          }
          ii.label += ')';
        }
        inst_ids[{a.name, idx}] = static_cast<int>(gp.insts.size());
        gp.insts.push_back(std::move(ii));
        for (size_t j = dims.size(); j-- > 0;) {
          if (++idx[j] < dims[j]) break;
          idx[j] = 0;
        }
      }
      ai.n_inst = static_cast<int>(gp.insts.size()) - ai.first_inst;
      attr_ids[a.name] = static_cast<int>(gp.attrs.size());
      gp.attrs.push_back(std::move(ai));
    }
  }

  int attr_id(const std::string& name, SourcePos pos) const {
    auto it = attr_ids.find(name);
    if (it == attr_ids.end())
      throw ParseError("undeclared attribute '" + name + "'", pos);
    return it->second;
  }

  int object_id(int sort, const std::string& name, SourcePos pos) const {
    const auto& objs = gp.sorts[sort].objects;
    for (size_t i = 0; i < objs.size(); ++i)
      if (objs[i] == name) return static_cast<int>(i);
    throw ParseError("'" + name + "' is not in sort '" + gp.sorts[sort].name + "'", pos);
  }

  // --- variable environments ----------------------------------------------

  // Collect typed variables of a clause in first-occurrence order.
  void collect_vars(const Atom& a, const std::vector<int>& arg_sorts,
                    std::vector<std::pair<std::string, int>>& vars) const {
    for (size_t i = 0; i < a.args.size(); ++i) {
      if (!a.args[i].is_var) continue;
      const std::string& v = a.args[i].text;
      bool seen = false;
      for (auto& [name, sort] : vars)
        if (name == v) seen = true;
      if (!seen) vars.emplace_back(v, arg_sorts[i]);
    }
  }

  void collect_literal_vars(const Literal& l, std::vector<std::pair<std::string, int>>& vars,
                            const std::string& skip = "") const {
    if (l.is_builtin_neq()) return;
    int aid = attr_id(l.atom.attr, l.atom.pos);
    collect_vars(l.atom, gp.attrs[aid].arg_sorts, vars);
    if (l.value.is_var && l.value.text != skip) {
      bool seen = false;
      for (auto& [name, sort] : vars)
        if (name == l.value.text) seen = true;
      if (!seen) vars.emplace_back(l.value.text, gp.attrs[aid].range_sort);
    }
  }

  int subst_term(const Term& t, const std::vector<std::pair<std::string, int>>& vars,
                 const std::vector<int>& binding, int sort) const {
    if (!t.is_var) return object_id(sort, t.text, t.pos);
    for (size_t i = 0; i < vars.size(); ++i)
      if (vars[i].first == t.text) return binding[i];
    throw ParseError("unbound variable " + t.text, t.pos);
  }

  int subst_inst(const Atom& a, const std::vector<std::pair<std::string, int>>& vars,
                 const std::vector<int>& binding) const {
    int aid = attr_id(a.attr, a.pos);
    std::vector<int> args;
    for (size_t i = 0; i < a.args.size(); ++i)
      args.push_back(subst_term(a.args[i], vars, binding, gp.attrs[aid].arg_sorts[i]));
    return inst_ids.at({a.attr, args});
  }

  // Returns false when the literal is a builtin inequality that evaluated to
  // a constant (true: drop it, false: the whole clause instance is dead).
  bool subst_literal(const Literal& l, const std::vector<std::pair<std::string, int>>& vars,
                     const std::vector<int>& binding, std::vector<GroundProgram::GLit>& out,
                     bool& dead) const {
    if (l.is_builtin_neq()) {
      int sort = -1;
      for (size_t i = 0; i < vars.size(); ++i)
        if (vars[i].first == l.atom.args[0].text) sort = vars[i].second;
      if (sort < 0) throw ParseError("variable " + l.atom.args[0].text + " in '!=' is unbound",
                                     l.atom.args[0].pos);
      int lhs = subst_term(l.atom.args[0], vars, binding, sort);
      int rhs = subst_term(l.value, vars, binding, sort);
      bool holds = (lhs != rhs) != l.naf;
      if (!holds) dead = true;
      return false;
    }
    int aid = attr_id(l.atom.attr, l.atom.pos);
    GroundProgram::GLit g;
    g.inst = subst_inst(l.atom, vars, binding);
    g.value = subst_term(l.value, vars, binding, gp.attrs[aid].range_sort);
    g.neq = l.cmp == Cmp::Neq;
    g.naf = l.naf;
    out.push_back(g);
    return true;
  }

  template <typename Fn>
  void for_each_binding(const std::vector<std::pair<std::string, int>>& vars, Fn&& fn) const {
    std::vector<int> binding(vars.size(), 0);
    size_t total = 1;
    for (auto& [name, sort] : vars) total *= gp.sorts[sort].objects.size();
    for (size_t k = 0; k < total; ++k) {
      fn(binding);
      for (size_t j = vars.size(); j-- > 0;) {
        if (++binding[j] < static_cast<int>(gp.sorts[vars[j].second].objects.size())) break;
        binding[j] = 0;
      }
    }
  }

  void ground_rules() {
    for (const auto& r : prog.rules) {
      std::vector<std::pair<std::string, int>> vars;
      if (r.head) collect_literal_vars(*r.head, vars);
      for (const auto& l : r.body) collect_literal_vars(l, vars);
      for_each_binding(vars, [&](const std::vector<int>& b) {
        GroundProgram::GRule gr;
        bool dead = false;
        for (const auto& l : r.body) subst_literal(l, vars, b, gr.body, dead);
        if (dead) return;
        if (r.head) {
          // "a != y :- B" desugars to the constraint ":- B, a = y"
          std::vector<GroundProgram::GLit> head;
          bool hdead = false;
          subst_literal(*r.head, vars, b, head, hdead);
          if (r.head->cmp == Cmp::Neq) {
            GroundProgram::GLit ex = head[0];
            ex.neq = false;
            gr.body.push_back(ex);
            gp.constraints.push_back(std::move(gr));
            return;
          }
          gr.head_inst = head[0].inst;
          gr.head_value = head[0].value;
          gp.rules.push_back(std::move(gr));
          return;
        }
        gp.constraints.push_back(std::move(gr));
      });
    }
  }

  void ground_randoms() {
    int src = 0;
    for (const auto& rs : prog.randoms) {
      std::vector<std::pair<std::string, int>> vars;
      int aid = attr_id(rs.atom.attr, rs.atom.pos);
      collect_vars(rs.atom, gp.attrs[aid].arg_sorts, vars);
      for (const auto& l : rs.condition) collect_literal_vars(l, vars);
      if (rs.qual_atom) {
        // the qualifier variable is local; other qualifier args join the env
        std::vector<std::pair<std::string, int>> qvars;
        const auto& q = *rs.qual_atom;
        int qid = attr_id(q.attr, q.pos);
        for (size_t i = 0; i < q.args.size(); ++i) {
          if (!q.args[i].is_var || q.args[i].text == *rs.qual_var) continue;
          bool seen = false;
          for (auto& [name, sort] : vars)
            if (name == q.args[i].text) seen = true;
          if (!seen) vars.emplace_back(q.args[i].text, gp.attrs[qid].arg_sorts[i]);
        }
      }
      for_each_binding(vars, [&](const std::vector<int>& b) {
        GroundProgram::GRandom g;
        g.src = src;
        g.inst = subst_inst(rs.atom, vars, b);
        bool dead = false;
        for (const auto& l : rs.condition) subst_literal(l, vars, b, g.condition, dead);
        if (dead) return;
        int range_sort = gp.attrs[aid].range_sort;
        int n = static_cast<int>(gp.sorts[range_sort].objects.size());
        for (int v = 0; v < n; ++v) {
          int qual_inst = -1;
          if (rs.qual_atom) {
            // bind the qualifier variable to candidate value v
            int qid = attr_id(rs.qual_atom->attr, rs.qual_atom->pos);
            std::vector<int> qargs;
            for (size_t i = 0; i < rs.qual_atom->args.size(); ++i) {
              const Term& t = rs.qual_atom->args[i];
              if (t.is_var && t.text == *rs.qual_var) {
                qargs.push_back(v);
              } else {
                qargs.push_back(subst_term(t, vars, b, gp.attrs[qid].arg_sorts[i]));
              }
            }
            qual_inst = inst_ids.at({rs.qual_atom->attr, qargs});
          }
          g.range.emplace_back(v, qual_inst);
        }
        gp.randoms.push_back(std::move(g));
      });
      ++src;
    }
  }

  void ground_pratoms() {
    for (const auto& pa : prog.pratoms) {
      std::vector<std::pair<std::string, int>> vars;
      int aid = attr_id(pa.atom.attr, pa.atom.pos);
      collect_vars(pa.atom, gp.attrs[aid].arg_sorts, vars);
      if (pa.value.is_var) {
        bool seen = false;
        for (auto& [name, sort] : vars)
          if (name == pa.value.text) seen = true;
        if (!seen) vars.emplace_back(pa.value.text, gp.attrs[aid].range_sort);
      }
      for (const auto& l : pa.condition) collect_literal_vars(l, vars);
      for_each_binding(vars, [&](const std::vector<int>& b) {
        GroundProgram::GPr g;
        g.inst = subst_inst(pa.atom, vars, b);
        g.value = subst_term(pa.value, vars, b, gp.attrs[aid].range_sort);
        g.prob = pa.prob;
        bool dead = false;
        for (const auto& l : pa.condition) subst_literal(l, vars, b, g.condition, dead);
        if (dead) return;
        gp.pratoms.push_back(std::move(g));
      });
    }
  }

  // --- stratification over (inst,value) nodes ------------------------------

  int node(int inst, int value) const { return gp.insts[inst].node_base + value; }

  // edges[to] lists (from, negative); dependency of head on body
  void literal_edges(const GroundProgram::GLit& l, std::vector<std::pair<int, bool>>& deps) const {
    const auto& ii = gp.insts[l.inst];
    if (l.naf) {
      if (l.neq) {
        // "not a != x" is decided only once every alternative is
        for (int v = 0; v < ii.n_values; ++v) deps.emplace_back(node(l.inst, v), true);
      } else {
        // "not a = x" only needs the derivations of x itself to be closed;
        // a later derivation of a different value cannot invalidate it.
        deps.emplace_back(node(l.inst, l.value), true);
      }
      return;
    }
    if (l.neq) {
      for (int v = 0; v < ii.n_values; ++v)
        if (v != l.value) deps.emplace_back(node(l.inst, v), false);
      deps.emplace_back(node(l.inst, l.value), true);
      return;
    }
    if (ii.is_boolean && l.value == 0) {
      // body "-p": explicitly derived false or settled-underivable true
      deps.emplace_back(node(l.inst, 0), false);
      deps.emplace_back(node(l.inst, 1), true);
      return;
    }
    deps.emplace_back(node(l.inst, l.value), false);
  }

  void stratify() {
    std::vector<std::vector<std::pair<int, bool>>> in(n_nodes);
    for (const auto& r : gp.rules) {
      int h = node(r.head_inst, r.head_value);
      for (const auto& l : r.body) literal_edges(l, in[h]);
    }
    // Tarjan SCC, iterative
    std::vector<int> index(n_nodes, -1), low(n_nodes, 0), comp(n_nodes, -1);
    std::vector<int> stack, on(n_nodes, 0);
    int next_index = 0, n_comp = 0;
    struct Frame {
      int v;
      size_t ei;
    };
    for (int start = 0; start < n_nodes; ++start) {
      if (index[start] >= 0) continue;
      std::vector<Frame> frames{{start, 0}};
      index[start] = low[start] = next_index++;
      stack.push_back(start);
      on[start] = 1;
      while (!frames.empty()) {
        Frame& f = frames.back();
        if (f.ei < in[f.v].size()) {
          int w = in[f.v][f.ei++].first;
          if (index[w] < 0) {
            index[w] = low[w] = next_index++;
            stack.push_back(w);
            on[w] = 1;
            frames.push_back({w, 0});
          } else if (on[w]) {
            low[f.v] = std::min(low[f.v], index[w]);
          }
        } else {
          if (low[f.v] == index[f.v]) {
            while (true) {
              int w = stack.back();
              stack.pop_back();
              on[w] = 0;
              comp[w] = n_comp;
              if (w == f.v) break;
            }
            ++n_comp;
          }
          int v = f.v;
          frames.pop_back();
          if (!frames.empty()) low[frames.back().v] = std::min(low[frames.back().v], low[v]);
        }
      }
    }
    // reject negative edges inside a component, compute strata over the DAG
    std::vector<int> stratum(n_comp, 0);
    bool changed = true;
    int rounds = 0;
    while (changed) {
      changed = false;
      if (++rounds > n_comp + 2) break;  // cycle through negation; caught below
      for (int v = 0; v < n_nodes; ++v) {
        for (const auto& [w, negedge] : in[v]) {
          if (comp[v] == comp[w]) {
            if (negedge) {
              std::string where;
              for (int u = 0; u < n_nodes; ++u) {
                if (comp[u] != comp[v]) continue;
                for (const auto& ii : gp.insts)
                  if (u >= ii.node_base && u < ii.node_base + ii.n_values) {
                    if (!where.empty()) where += ", ";
                    where += ii.label;
                    break;
                  }
                if (where.size() > 200) break;
              }
              throw SemanticError("program is not stratified: default negation cycle through {" +
                                  where + "}");
            }
            continue;
          }
          int need = stratum[comp[w]] + (negedge ? 1 : 0);
          if (stratum[comp[v]] < need) {
            stratum[comp[v]] = need;
            changed = true;
          }
        }
      }
    }
    gp.n_strata = 0;
    for (auto& r : gp.rules) {
      r.stratum = stratum[comp[node(r.head_inst, r.head_value)]];
      gp.n_strata = std::max(gp.n_strata, r.stratum + 1);
    }
    if (gp.n_strata == 0) gp.n_strata = 1;
    std::stable_sort(gp.rules.begin(), gp.rules.end(),
                     [](const auto& a, const auto& b) { return a.stratum < b.stratum; });
  }

  // --- random dependency order & support masks ------------------------------

  void order_randoms() {
    int n_attr = static_cast<int>(gp.attrs.size());
    // name-level dependency edges dep[a] = set of attrs a depends on
    std::vector<std::set<int>> dep(n_attr);
    auto add_body = [&](int a, const std::vector<GroundProgram::GLit>& body) {
      for (const auto& l : body) dep[a].insert(gp.insts[l.inst].attr);
    };
    for (const auto& r : gp.rules) add_body(gp.insts[r.head_inst].attr, r.body);
    std::set<int> random_attrs;
    for (const auto& rs : gp.randoms) {
      int a = gp.insts[rs.inst].attr;
      random_attrs.insert(a);
      add_body(a, rs.condition);
      for (const auto& [v, qual] : rs.range)
        if (qual >= 0) dep[a].insert(gp.insts[qual].attr);
    }
    for (const auto& pa : gp.pratoms) add_body(gp.insts[pa.inst].attr, pa.condition);
    // transitive closure (small attr counts)
    bool changed = true;
    while (changed) {
      changed = false;
      for (int a = 0; a < n_attr; ++a) {
        size_t before = dep[a].size();
        std::set<int> add;
        for (int b : dep[a]) add.insert(dep[b].begin(), dep[b].end());
        dep[a].insert(add.begin(), add.end());
        if (dep[a].size() != before) changed = true;
      }
    }
    for (int a : random_attrs)
      if (dep[a].count(a))
        throw SemanticError("circular dependence involving random attribute '" +
                            gp.attrs[a].name + "'");
    // topological order of random attrs (lowest attr id first among ready)
    std::vector<int> order;
    std::set<int> placed;
    while (placed.size() < random_attrs.size()) {
      bool advanced = false;
      for (int a : random_attrs) {
        if (placed.count(a)) continue;
        bool ready = true;
        for (int b : dep[a])
          if (b != a && random_attrs.count(b) && !placed.count(b)) ready = false;
        if (ready) {
          order.push_back(a);
          placed.insert(a);
          advanced = true;
        }
      }
      if (!advanced) throw SemanticError("circular dependence among random attributes");
    }
    gp.random_slot.assign(gp.insts.size(), -1);
    for (int a : order) {
      std::set<int> insts_with_sel;
      for (const auto& rs : gp.randoms)
        if (gp.insts[rs.inst].attr == a) insts_with_sel.insert(rs.inst);
      for (int inst : insts_with_sel) {
        gp.random_slot[inst] = static_cast<int>(gp.random_order.size());
        gp.random_order.push_back(inst);
      }
    }
    if (gp.random_order.size() > 64)
      throw SemanticError("too many ground random attributes (limit 64, got " +
                          std::to_string(gp.random_order.size()) + ")");
    gp.sels_of.assign(gp.insts.size(), {});
    for (size_t i = 0; i < gp.randoms.size(); ++i)
      gp.sels_of[gp.randoms[i].inst].push_back(static_cast<int>(i));
    gp.prs_of.assign(gp.insts.size(), {});
    for (size_t i = 0; i < gp.pratoms.size(); ++i)
      gp.prs_of[gp.pratoms[i].inst].push_back(static_cast<int>(i));
    for (const auto& pa : gp.pratoms)
      if (!gp.is_random(pa.inst))
        throw SemanticError("pr-atom for '" + gp.insts[pa.inst].label +
                            "', which has no random selection");
  }

  void compute_support() {
    // support(inst) = random instances it can transitively depend on
    gp.inst_support.assign(gp.insts.size(), 0);
    for (size_t i = 0; i < gp.insts.size(); ++i)
      if (gp.random_slot[i] >= 0) gp.inst_support[i] = 1ull << gp.random_slot[i];
    bool changed = true;
    while (changed) {
      changed = false;
      for (const auto& r : gp.rules) {
        uint64_t m = gp.inst_support[r.head_inst];
        for (const auto& l : r.body) m |= gp.inst_support[l.inst];
        if (m != gp.inst_support[r.head_inst]) {
          gp.inst_support[r.head_inst] = m;
          changed = true;
        }
      }
    }
  }

  GroundProgram build() {
    intern_decls();
    ground_rules();
    ground_randoms();
    ground_pratoms();
    stratify();
    order_randoms();
    compute_support();
    return std::move(gp);
  }
};

}  // namespace

int GroundProgram::find_attr(const std::string& name) const {
  for (size_t i = 0; i < attrs.size(); ++i)
    if (attrs[i].name == name) return static_cast<int>(i);
  return -1;
}

int GroundProgram::find_inst(const std::string& name,
                             const std::vector<std::string>& args) const {
  int aid = find_attr(name);
  if (aid < 0) return -1;
  const AttrInfo& a = attrs[aid];
  if (args.size() != a.arg_sorts.size()) return -1;
  std::vector<int> ids;
  for (size_t i = 0; i < args.size(); ++i) {
    const auto& objs = sorts[a.arg_sorts[i]].objects;
    int oid = -1;
    for (size_t j = 0; j < objs.size(); ++j)
      if (objs[j] == args[i]) oid = static_cast<int>(j);
    if (oid < 0) return -1;
    ids.push_back(oid);
  }
  for (int k = a.first_inst; k < a.first_inst + a.n_inst; ++k)
    if (insts[k].args == ids) return k;
  return -1;
}

int GroundProgram::find_value(int inst, const std::string& name) const {
  const auto& objs = sorts[attrs[insts[inst].attr].range_sort].objects;
  for (size_t i = 0; i < objs.size(); ++i)
    if (objs[i] == name) return static_cast<int>(i);
  return -1;
}

const std::string& GroundProgram::value_name(int inst, int value) const {
  return sorts[attrs[insts[inst].attr].range_sort].objects[value];
}

GroundProgram::GLit GroundProgram::resolve(const Literal& lit) const {
  std::vector<std::string> args;
  for (const auto& t : lit.atom.args) {
    if (t.is_var) throw EvalError("evidence literal must be ground: " + to_string(lit));
    args.push_back(t.text);
  }
  int inst = find_inst(lit.atom.attr, args);
  if (inst < 0) throw EvalError("unknown attribute instance in '" + to_string(lit) + "'");
  std::string vtext = lit.value.text;
  if (vtext.empty()) {
    if (!insts[inst].is_boolean)
      throw EvalError("'" + insts[inst].label + "' needs '= value'");
    vtext = "true";
  }
  int value = find_value(inst, vtext);
  if (value < 0)
    throw EvalError("value '" + vtext + "' not in range of '" + insts[inst].label + "'");
  GLit g;
  g.inst = inst;
  g.value = value;
  g.neq = lit.cmp == Cmp::Neq;
  g.naf = lit.naf;
  return g;
}

std::vector<std::string> GroundProgram::influence_descendants(const std::string& attr) const {
  int n_attr = static_cast<int>(attrs.size());
  std::vector<std::set<int>> out(n_attr);
  auto add_body = [&](int a, const std::vector<GLit>& body) {
    for (const auto& l : body) out[insts[l.inst].attr].insert(a);
  };
  for (const auto& r : rules) add_body(insts[r.head_inst].attr, r.body);
  for (const auto& rs : randoms) {
    int a = insts[rs.inst].attr;
    add_body(a, rs.condition);
    for (const auto& [v, qual] : rs.range)
      if (qual >= 0) out[insts[qual].attr].insert(a);
  }
  for (const auto& pa : pratoms) add_body(insts[pa.inst].attr, pa.condition);
  for (const auto& c : constraints) {
    // a constraint couples every pair of attributes it mentions
    for (const auto& l1 : c.body)
      for (const auto& l2 : c.body)
        if (l1.inst != l2.inst) out[insts[l1.inst].attr].insert(insts[l2.inst].attr);
  }
  int start = find_attr(attr);
  if (start < 0) throw EvalError("unknown attribute '" + attr + "'");
  std::set<int> seen{start};
  std::vector<int> work{start};
  while (!work.empty()) {
    int a = work.back();
    work.pop_back();
    for (int b : out[a])
      if (seen.insert(b).second) work.push_back(b);
  }
  std::vector<std::string> names;
  for (int a : seen)
    if (a != start) names.push_back(attrs[a].name);
  std::sort(names.begin(), names.end());
  return names;
}

GroundProgram ground(const Program& prog) {
  Builder b(prog);
  return b.build();
}

}  // namespace kbplan::plog
