#include "kbplan/plog/ast.hpp"

#include <cctype>
#include <charconv>
#include <map>
#include <set>
#include <sstream>

namespace kbplan::plog {

namespace {

enum class Tok {
  Ident,
  Var,
  Float,
  Dot,
  Comma,
  Colon,
  ColonDash,
  Pipe,
  Arrow,
  Eq,
  Neq,
  LParen,
  RParen,
  LBrace,
  RBrace,
  Minus,
  Not,
  End,
};

struct Token {
  Tok kind;
  std::string text;
  double num = 0.0;
  SourcePos pos;
};

class Lexer {
 public:
  explicit Lexer(const std::string& src) : src_(src) { next(); }

  const Token& peek() const { return tok_; }

  Token take() {
    Token t = tok_;
    next();
    return t;
  }

 private:
  void next() {
    while (i_ < src_.size()) {
      char c = src_[i_];
      if (c == '%') {
        while (i_ < src_.size() && src_[i_] != '\n') ++i_;
      } else if (c == '\n') {
        ++line_;
        col_ = 1;
        ++i_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++col_;
        ++i_;
      } else {
        break;
      }
    }
    tok_.pos = {line_, col_};
    if (i_ >= src_.size()) {
      tok_.kind = Tok::End;
      tok_.text.clear();
      return;
    }
    char c = src_[i_];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t j = i_;
      while (j < src_.size() && std::isdigit(static_cast<unsigned char>(src_[j]))) ++j;
      // consume a fractional part only when a digit follows the dot, so a
      // statement-final "1." lexes as number then period
      if (j + 1 < src_.size() && src_[j] == '.' &&
          std::isdigit(static_cast<unsigned char>(src_[j + 1]))) {
        ++j;
        while (j < src_.size() && std::isdigit(static_cast<unsigned char>(src_[j]))) ++j;
      }
      tok_.kind = Tok::Float;
      tok_.text = src_.substr(i_, j - i_);
      tok_.num = std::stod(tok_.text);
      advance(j - i_);
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t j = i_;
      while (j < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[j])) || src_[j] == '_'))
        ++j;
      tok_.text = src_.substr(i_, j - i_);
      if (tok_.text == "not")
        tok_.kind = Tok::Not;
      else if (std::isupper(static_cast<unsigned char>(c)) || c == '_')
        tok_.kind = Tok::Var;
      else
        tok_.kind = Tok::Ident;
      advance(j - i_);
      return;
    }
    auto two = [&](char a, char b) {
      return c == a && i_ + 1 < src_.size() && src_[i_ + 1] == b;
    };
    if (two(':', '-')) {
      tok_.kind = Tok::ColonDash;
      advance(2);
      return;
    }
    if (two('!', '=')) {
      tok_.kind = Tok::Neq;
      advance(2);
      return;
    }
    if (two('-', '>')) {
      tok_.kind = Tok::Arrow;
      advance(2);
      return;
    }
    switch (c) {
      case '.': tok_.kind = Tok::Dot; break;
      case ',': tok_.kind = Tok::Comma; break;
      case ':': tok_.kind = Tok::Colon; break;
      case '|': tok_.kind = Tok::Pipe; break;
      case '=': tok_.kind = Tok::Eq; break;
      case '(': tok_.kind = Tok::LParen; break;
      case ')': tok_.kind = Tok::RParen; break;
      case '{': tok_.kind = Tok::LBrace; break;
      case '}': tok_.kind = Tok::RBrace; break;
      case '-': tok_.kind = Tok::Minus; break;
      default:
        throw ParseError(std::string("unexpected character '") + c + "'", tok_.pos);
    }
    tok_.text = std::string(1, c);
    advance(1);
  }

  void advance(size_t n) {
    i_ += n;
    col_ += static_cast<int>(n);
  }

  const std::string& src_;
  size_t i_ = 0;
  int line_ = 1;
  int col_ = 1;
  Token tok_;
};

// Declaration tables collected after parsing; used to type variables, resolve
// object names per expected sort, and reject bad references. Declarations may
// appear anywhere in the file, so checking runs as a second pass.
class DeclCheck {
 public:
  void add_sort(const SortDecl& s) {
    if (sorts_.count(s.name))
      throw ParseError("duplicate sort '" + s.name + "'", s.pos);
    std::set<std::string> objs;
    for (const auto& o : s.objects) {
      if (!objs.insert(o).second)
        throw ParseError("duplicate object '" + o + "' in sort '" + s.name + "'", s.pos);
    }
    sorts_[s.name] = std::move(objs);
  }

  void add_attr(const AttrDecl& a) {
    if (attrs_.count(a.name))
      throw ParseError("duplicate attribute '" + a.name + "'", a.pos);
    for (const auto& s : a.arg_sorts) require_sort(s, a.pos);
    if (a.range != "boolean") require_sort(a.range, a.pos);
    attrs_[a.name] = a;
  }

  const AttrDecl& attr(const std::string& name, SourcePos pos) const {
    auto it = attrs_.find(name);
    if (it == attrs_.end())
      throw ParseError("undeclared attribute '" + name + "'", pos);
    return it->second;
  }

  bool has_object(const std::string& sort, const std::string& obj) const {
    if (sort == "boolean") return obj == "false" || obj == "true";
    auto it = sorts_.find(sort);
    return it != sorts_.end() && it->second.count(obj) > 0;
  }

  void require_sort(const std::string& name, SourcePos pos) const {
    if (name != "boolean" && !sorts_.count(name))
      throw ParseError("undeclared sort '" + name + "'", pos);
  }

 private:
  std::map<std::string, std::set<std::string>> sorts_;
  std::map<std::string, AttrDecl> attrs_;
};

class Parser {
 public:
  explicit Parser(const std::string& src) : lex_(src) {}

  Program run() {
    Program p;
    while (lex_.peek().kind != Tok::End) statement(p);
    return p;
  }

 private:
  Token expect(Tok k, const char* what) {
    if (lex_.peek().kind != k)
      throw ParseError(std::string("expected ") + what + ", found '" +
                           (lex_.peek().kind == Tok::End ? "<eof>" : lex_.peek().text) + "'",
                       lex_.peek().pos);
    return lex_.take();
  }

  void statement(Program& p) {
    const Token& t = lex_.peek();
    if (t.kind == Tok::Ident && (t.text == "random" || t.text == "pr")) {
      // peek one token ahead by copying the lexer is awkward; "random"/"pr"
      // followed by '(' are reserved statement forms
      Token name = lex_.take();
      if (lex_.peek().kind == Tok::LParen) {
        if (name.text == "random")
          random_stmt(p, name.pos);
        else
          pr_stmt(p, name.pos);
        return;
      }
      rest_of_rule(p, name);
      return;
    }
    if (t.kind == Tok::ColonDash) {
      Rule r;
      r.pos = t.pos;
      lex_.take();
      r.body = body();
      end_stmt();
      p.rules.push_back(std::move(r));
      return;
    }
    if (t.kind == Tok::Minus || t.kind == Tok::Not) {
      Token first = lex_.take();
      rule_from_marker(p, first);
      return;
    }
    Token name = expect(Tok::Ident, "identifier");
    if (lex_.peek().kind == Tok::Eq) {
      // could be a sort declaration (ident = { ... }) or a fact (attr = value)
      lex_.take();
      if (lex_.peek().kind == Tok::LBrace) {
        sort_stmt(p, name);
        return;
      }
      Rule r;
      r.pos = name.pos;
      Literal h;
      h.atom = Atom{name.text, {}, name.pos};
      h.value = term();
      r.head = std::move(h);
      if (lex_.peek().kind == Tok::ColonDash) {
        lex_.take();
        r.body = body();
      }
      end_stmt();
      p.rules.push_back(std::move(r));
      return;
    }
    if (lex_.peek().kind == Tok::Colon) {
      attr_stmt(p, name);
      return;
    }
    rest_of_rule(p, name);
  }

  void sort_stmt(Program& p, const Token& name) {
    SortDecl s;
    s.name = name.text;
    s.pos = name.pos;
    expect(Tok::LBrace, "'{'");
    s.objects.push_back(expect(Tok::Ident, "object name").text);
    while (lex_.peek().kind == Tok::Comma) {
      lex_.take();
      s.objects.push_back(expect(Tok::Ident, "object name").text);
    }
    expect(Tok::RBrace, "'}'");
    end_stmt();
    p.sorts.push_back(std::move(s));
  }

  void attr_stmt(Program& p, const Token& name) {
    if (name.text == "random" || name.text == "pr" || name.text == "boolean")
      throw ParseError("'" + name.text + "' is reserved", name.pos);
    AttrDecl a;
    a.name = name.text;
    a.pos = name.pos;
    expect(Tok::Colon, "':'");
    std::vector<std::string> sorts;
    sorts.push_back(expect(Tok::Ident, "sort name").text);
    while (lex_.peek().kind == Tok::Comma) {
      lex_.take();
      sorts.push_back(expect(Tok::Ident, "sort name").text);
    }
    if (lex_.peek().kind == Tok::Arrow) {
      lex_.take();
      a.arg_sorts = std::move(sorts);
      a.range = expect(Tok::Ident, "sort name").text;
    } else {
      if (sorts.size() != 1)
        throw ParseError("attribute declaration needs '->' before range", lex_.peek().pos);
      a.range = sorts[0];
    }
    end_stmt();
    p.attrs.push_back(std::move(a));
  }

  void rest_of_rule(Program& p, const Token& name) {
    Rule r;
    r.pos = name.pos;
    r.head = literal_from_name(name, false, false);
    if (lex_.peek().kind == Tok::ColonDash) {
      lex_.take();
      r.body = body();
    }
    end_stmt();
    p.rules.push_back(std::move(r));
  }

  void rule_from_marker(Program& p, const Token& marker) {
    if (marker.kind == Tok::Not)
      throw ParseError("default negation cannot head a rule", marker.pos);
    Token name = expect(Tok::Ident, "identifier");
    Rule r;
    r.pos = marker.pos;
    r.head = literal_from_name(name, true, false);
    if (lex_.peek().kind == Tok::ColonDash) {
      lex_.take();
      r.body = body();
    }
    end_stmt();
    p.rules.push_back(std::move(r));
  }

  void random_stmt(Program& p, SourcePos pos) {
    RandomSelection rs;
    rs.pos = pos;
    expect(Tok::LParen, "'('");
    rs.atom = atom();
    if (lex_.peek().kind == Tok::Colon) {
      lex_.take();
      expect(Tok::LBrace, "'{'");
      rs.qual_var = expect(Tok::Var, "variable").text;
      expect(Tok::Colon, "':'");
      rs.qual_atom = atom();
      expect(Tok::RBrace, "'}'");
    }
    expect(Tok::RParen, "')'");
    if (lex_.peek().kind == Tok::ColonDash) {
      lex_.take();
      rs.condition = body();
    }
    end_stmt();
    p.randoms.push_back(std::move(rs));
  }

  void pr_stmt(Program& p, SourcePos pos) {
    PrAtom pa;
    pa.pos = pos;
    expect(Tok::LParen, "'('");
    pa.atom = atom();
    expect(Tok::Eq, "'='");
    pa.value = term();
    if (lex_.peek().kind == Tok::Pipe) {
      lex_.take();
      pa.condition = body();
    }
    expect(Tok::RParen, "')'");
    expect(Tok::Eq, "'='");
    Token v = expect(Tok::Float, "probability");
    pa.prob = v.num;
    if (pa.prob < 0.0 || pa.prob > 1.0)
      throw ParseError("probability out of [0,1]", v.pos);
    end_stmt();
    p.pratoms.push_back(std::move(pa));
  }

  std::vector<Literal> body() {
    std::vector<Literal> lits;
    lits.push_back(body_literal());
    while (lex_.peek().kind == Tok::Comma) {
      lex_.take();
      lits.push_back(body_literal());
    }
    return lits;
  }

  Literal body_literal() {
    bool naf = false;
    if (lex_.peek().kind == Tok::Not) {
      lex_.take();
      naf = true;
    }
    bool neg = false;
    if (lex_.peek().kind == Tok::Minus) {
      lex_.take();
      neg = true;
    }
    if (!neg && lex_.peek().kind == Tok::Var) {
      // builtin inequality X != t
      Token lhs = lex_.take();
      expect(Tok::Neq, "'!='");
      Literal l;
      l.naf = naf;
      l.cmp = Cmp::Neq;
      l.atom.attr.clear();
      l.atom.pos = lhs.pos;
      l.atom.args.push_back(Term{true, lhs.text, lhs.pos});
      l.value = term();
      return l;
    }
    Token name = expect(Tok::Ident, "identifier");
    return literal_from_name(name, neg, naf);
  }

  // Parses the remainder of a literal whose attribute name token is `name`.
  // Bare boolean sugar is resolved after all declarations are known.
  Literal literal_from_name(const Token& name, bool neg, bool naf) {
    Literal l;
    l.naf = naf;
    l.neg = neg;
    l.atom.attr = name.text;
    l.atom.pos = name.pos;
    if (lex_.peek().kind == Tok::LParen) {
      lex_.take();
      l.atom.args.push_back(term());
      while (lex_.peek().kind == Tok::Comma) {
        lex_.take();
        l.atom.args.push_back(term());
      }
      expect(Tok::RParen, "')'");
    }
    if (neg) {
      l.value = Term{false, "false", name.pos};
      return l;
    }
    if (lex_.peek().kind == Tok::Eq || lex_.peek().kind == Tok::Neq) {
      l.cmp = lex_.take().kind == Tok::Eq ? Cmp::Eq : Cmp::Neq;
      l.value = term();
    } else {
      l.value = Term{false, "", name.pos};
    }
    return l;
  }

  Atom atom() {
    Token name = expect(Tok::Ident, "attribute name");
    Atom a;
    a.attr = name.text;
    a.pos = name.pos;
    if (lex_.peek().kind == Tok::LParen) {
      lex_.take();
      a.args.push_back(term());
      while (lex_.peek().kind == Tok::Comma) {
        lex_.take();
        a.args.push_back(term());
      }
      expect(Tok::RParen, "')'");
    }
    return a;
  }

  Term term() {
    const Token& t = lex_.peek();
    if (t.kind == Tok::Var) {
      Token v = lex_.take();
      return Term{true, v.text, v.pos};
    }
    Token o = expect(Tok::Ident, "object or variable");
    return Term{false, o.text, o.pos};
  }

  void end_stmt() { expect(Tok::Dot, "'.'"); }

  Lexer lex_;
};

// Second pass: resolve bare boolean sugar, then type-check every clause
// against the complete declaration tables.
class Validator {
 public:
  void run(Program& p) {
    for (const auto& s : p.sorts) decls_.add_sort(s);
    for (const auto& a : p.attrs) decls_.add_attr(a);
    for (auto& r : p.rules) {
      if (r.head) finish(*r.head);
      for (auto& l : r.body) finish(l);
      check_rule(r);
    }
    for (auto& rs : p.randoms) {
      for (auto& l : rs.condition) finish(l);
      check_random(rs);
    }
    for (auto& pa : p.pratoms) {
      for (auto& l : pa.condition) finish(l);
      check_pratom(pa);
    }
  }

 private:
  void finish(Literal& l) {
    if (l.is_builtin_neq()) return;
    const AttrDecl& d = decls_.attr(l.atom.attr, l.atom.pos);
    if (l.neg && d.range != "boolean")
      throw ParseError("classical negation applies only to boolean attributes; use '!=' "
                       "for functional attribute '" + l.atom.attr + "'",
                       l.atom.pos);
    if (!l.neg && !l.value.is_var && l.value.text.empty()) {
      if (d.range != "boolean")
        throw ParseError("functional attribute '" + l.atom.attr + "' needs '= value'",
                         l.atom.pos);
      l.value = Term{false, "true", l.atom.pos};
    }
  }

  void check_atom_args(const Atom& a, std::map<std::string, std::string>& var_sorts) {
    const AttrDecl& decl = decls_.attr(a.attr, a.pos);
    if (a.args.size() != decl.arg_sorts.size())
      throw ParseError("attribute '" + a.attr + "' expects " +
                           std::to_string(decl.arg_sorts.size()) + " argument(s)",
                       a.pos);
    for (size_t i = 0; i < a.args.size(); ++i)
      bind(a.args[i], decl.arg_sorts[i], var_sorts);
  }

  void bind(const Term& t, const std::string& sort, std::map<std::string, std::string>& vs) {
    if (t.is_var) {
      auto [it, fresh] = vs.emplace(t.text, sort);
      if (!fresh && it->second != sort)
        throw ParseError("variable " + t.text + " used with sorts '" + it->second +
                             "' and '" + sort + "'",
                         t.pos);
      return;
    }
    if (!decls_.has_object(sort, t.text))
      throw ParseError("'" + t.text + "' is not an object of sort '" + sort + "'", t.pos);
  }

  void check_clause(const std::optional<Literal>& head, const std::vector<Literal>& cond,
                    const Atom* extra, const std::optional<Atom>& qual,
                    const std::optional<std::string>& qual_var, const Term* value,
                    SourcePos pos) {
    std::map<std::string, std::string> vs;
    auto walk_lit = [&](const Literal& l) {
      if (l.is_builtin_neq()) return;  // handled after sorts are known
      check_atom_args(l.atom, vs);
      const AttrDecl& d = decls_.attr(l.atom.attr, l.atom.pos);
      bind(l.value, d.range, vs);
    };
    if (head) walk_lit(*head);
    if (extra) {
      check_atom_args(*extra, vs);
      const AttrDecl& d = decls_.attr(extra->attr, extra->pos);
      if (value) bind(*value, d.range, vs);
      if (qual_var) {
        auto [it, fresh] = vs.emplace(*qual_var, d.range);
        if (!fresh && it->second != d.range)
          throw ParseError("qualifier variable " + *qual_var + " sort clash", pos);
      }
    }
    if (qual) check_atom_args(*qual, vs);
    for (const auto& l : cond) walk_lit(l);
    // builtin inequalities: both sides must resolve to the same sort
    for (const auto& l : cond) {
      if (!l.is_builtin_neq()) continue;
      const Term& lhs = l.atom.args[0];
      auto it = vs.find(lhs.text);
      if (it == vs.end())
        throw ParseError("variable " + lhs.text + " in '!=' is unbound", lhs.pos);
      bind(l.value, it->second, vs);
    }
    // every head variable must be bound somewhere (it is, by sort typing),
    // and naf is body-only, enforced syntactically.
  }

  void check_rule(const Rule& r) {
    const Literal* h = r.head ? &r.head.value() : nullptr;
    std::optional<Literal> head_copy;
    if (h) head_copy = *h;
    check_clause(head_copy, r.body, nullptr, std::nullopt, std::nullopt, nullptr, r.pos);
  }

  void check_random(const RandomSelection& rs) {
    const AttrDecl& d = decls_.attr(rs.atom.attr, rs.atom.pos);
    if (rs.qual_atom) {
      const AttrDecl& q = decls_.attr(rs.qual_atom->attr, rs.qual_atom->pos);
      if (q.range != "boolean")
        throw ParseError("qualifier '" + q.name + "' must be boolean", rs.qual_atom->pos);
      bool uses_var = false;
      for (const auto& t : rs.qual_atom->args)
        if (t.is_var && t.text == *rs.qual_var) uses_var = true;
      if (!uses_var)
        throw ParseError("qualifier does not use variable " + *rs.qual_var, rs.qual_atom->pos);
    }
    (void)d;
    check_clause(std::nullopt, rs.condition, &rs.atom, rs.qual_atom, rs.qual_var, nullptr,
                 rs.pos);
  }

  void check_pratom(const PrAtom& pa) {
    check_clause(std::nullopt, pa.condition, &pa.atom, std::nullopt, std::nullopt, &pa.value,
                 pa.pos);
  }

  DeclCheck decls_;
};

void print_term(std::ostream& os, const Term& t) { os << t.text; }

void print_atom(std::ostream& os, const Atom& a) {
  os << a.attr;
  if (!a.args.empty()) {
    os << '(';
    for (size_t i = 0; i < a.args.size(); ++i) {
      if (i) os << ',';
      print_term(os, a.args[i]);
    }
    os << ')';
  }
}

void print_literal(std::ostream& os, const Literal& l) {
  if (l.naf) os << "not ";
  if (l.is_builtin_neq()) {
    print_term(os, l.atom.args[0]);
    os << " != ";
    print_term(os, l.value);
    return;
  }
  if (l.cmp == Cmp::Eq && !l.value.is_var && l.value.text == "true") {
    print_atom(os, l.atom);
    return;
  }
  if (l.cmp == Cmp::Eq && !l.value.is_var && l.value.text == "false") {
    os << '-';
    print_atom(os, l.atom);
    return;
  }
  print_atom(os, l.atom);
  os << (l.cmp == Cmp::Eq ? " = " : " != ");
  print_term(os, l.value);
}

void print_body(std::ostream& os, const std::vector<Literal>& body) {
  for (size_t i = 0; i < body.size(); ++i) {
    if (i) os << ", ";
    print_literal(os, body[i]);
  }
}

}  // namespace

Program parse_program(const std::string& text) {
  Parser p(text);
  Program prog = p.run();
  Validator v;
  v.run(prog);
  return prog;
}

Literal parse_literal(const std::string& text) {
  // literals here come from CLI/evidence strings; attributes are resolved
  // against a ground program later, so only shape is checked
  Lexer lex(text);
  bool naf = false;
  if (lex.peek().kind == Tok::Not) {
    lex.take();
    naf = true;
  }
  bool neg = false;
  if (lex.peek().kind == Tok::Minus) {
    lex.take();
    neg = true;
  }
  if (lex.peek().kind != Tok::Ident)
    throw ParseError("expected attribute name", lex.peek().pos);
  Token name = lex.take();
  Literal l;
  l.naf = naf;
  l.atom.attr = name.text;
  l.atom.pos = name.pos;
  if (lex.peek().kind == Tok::LParen) {
    lex.take();
    while (true) {
      if (lex.peek().kind != Tok::Ident)
        throw ParseError("evidence arguments must be ground", lex.peek().pos);
      Token a = lex.take();
      l.atom.args.push_back(Term{false, a.text, a.pos});
      if (lex.peek().kind == Tok::Comma) {
        lex.take();
        continue;
      }
      break;
    }
    if (lex.peek().kind != Tok::RParen) throw ParseError("expected ')'", lex.peek().pos);
    lex.take();
  }
  if (neg) {
    l.neg = true;
    l.value = Term{false, "false", name.pos};
  } else if (lex.peek().kind == Tok::Eq || lex.peek().kind == Tok::Neq) {
    l.cmp = lex.take().kind == Tok::Eq ? Cmp::Eq : Cmp::Neq;
    if (lex.peek().kind != Tok::Ident)
      throw ParseError("evidence value must be ground", lex.peek().pos);
    Token v = lex.take();
    l.value = Term{false, v.text, v.pos};
  } else {
    l.value = Term{false, "", name.pos};  // bare boolean; resolved against the program
  }
  if (lex.peek().kind != Tok::End) throw ParseError("trailing input after literal", lex.peek().pos);
  return l;
}

void Program::append(const Program& other) {
  sorts.insert(sorts.end(), other.sorts.begin(), other.sorts.end());
  attrs.insert(attrs.end(), other.attrs.begin(), other.attrs.end());
  rules.insert(rules.end(), other.rules.begin(), other.rules.end());
  randoms.insert(randoms.end(), other.randoms.begin(), other.randoms.end());
  pratoms.insert(pratoms.end(), other.pratoms.begin(), other.pratoms.end());
}

std::string Program::to_text() const {
  std::ostringstream os;
  for (const auto& s : sorts) {
    os << s.name << " = {";
    for (size_t i = 0; i < s.objects.size(); ++i) {
      if (i) os << ", ";
      os << s.objects[i];
    }
    os << "}.\n";
  }
  for (const auto& a : attrs) {
    os << a.name << " : ";
    if (a.arg_sorts.empty()) {
      os << a.range;
    } else {
      for (size_t i = 0; i < a.arg_sorts.size(); ++i) {
        if (i) os << ", ";
        os << a.arg_sorts[i];
      }
      os << " -> " << a.range;
    }
    os << ".\n";
  }
  for (const auto& r : rules) {
    if (r.head) print_literal(os, *r.head);
    if (!r.body.empty() || !r.head) {
      os << " :- ";
      print_body(os, r.body);
    }
    os << ".\n";
  }
  for (const auto& rs : randoms) {
    os << "random(";
    print_atom(os, rs.atom);
    if (rs.qual_var) {
      os << " : {" << *rs.qual_var << " : ";
      print_atom(os, *rs.qual_atom);
      os << "}";
    }
    os << ")";
    if (!rs.condition.empty()) {
      os << " :- ";
      print_body(os, rs.condition);
    }
    os << ".\n";
  }
  for (const auto& pa : pratoms) {
    os << "pr(";
    print_atom(os, pa.atom);
    os << " = " << pa.value.text;
    if (!pa.condition.empty()) {
      os << " | ";
      print_body(os, pa.condition);
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", pa.prob);
    os << ") = " << buf << ".\n";
  }
  return os.str();
}

std::string to_string(const Atom& atom) {
  std::ostringstream os;
  print_atom(os, atom);
  return os.str();
}

std::string to_string(const Literal& lit) {
  std::ostringstream os;
  print_literal(os, lit);
  return os.str();
}

}  // namespace kbplan::plog
