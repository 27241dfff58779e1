#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace kbplan::plog {

struct SourcePos {
  int line = 0;
  int col = 0;
};

// Parse-time failure: bad token, undeclared reference, arity/sort mismatch.
struct ParseError : std::runtime_error {
  SourcePos pos;
  ParseError(const std::string& msg, SourcePos p)
      : std::runtime_error(msg + " (line " + std::to_string(p.line) + ", col " +
                           std::to_string(p.col) + ")"),
        pos(p) {}
};

// Program-level failure detected while grounding: non-stratified negation,
// circular random dependencies, too many random attributes.
struct SemanticError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// World-enumeration failure: conflicting pr-atoms, negative residual mass,
// undefined functional attribute, evidence contradiction.
struct EvalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Object constant (lowercase) or variable (uppercase-initial).
struct Term {
  bool is_var = false;
  std::string text;
  SourcePos pos;
};

struct Atom {
  std::string attr;
  std::vector<Term> args;
  SourcePos pos;
};

enum class Cmp : uint8_t { Eq, Neq };

// One body or head literal. Boolean attributes are modeled as functional
// attributes over the builtin sort boolean = {false, true}: a bare atom p(t)
// means p(t)=true and -p(t) means p(t)=false. A leading "not" (naf) is
// default negation and is only legal in bodies.
// Builtin inequality between terms (X != y) is encoded with an empty attr
// name, lhs in atom.args[0] and rhs in value.
struct Literal {
  Atom atom;
  Term value;  // empty text on a bare atom until declarations resolve it
  Cmp cmp = Cmp::Eq;
  bool naf = false;
  bool neg = false;  // written with the classical '-' prefix

  bool is_builtin_neq() const { return atom.attr.empty(); }
};

struct Rule {
  std::optional<Literal> head;  // nullopt: constraint
  std::vector<Literal> body;    // empty body: fact
  SourcePos pos;
};

// random(a(t))., random(a(t) : {X : q(X,...)})., either with optional body.
struct RandomSelection {
  Atom atom;
  std::optional<std::string> qual_var;
  std::optional<Atom> qual_atom;
  std::vector<Literal> condition;
  SourcePos pos;
};

// pr(a(t) = y | B) = v.
struct PrAtom {
  Atom atom;
  Term value;
  std::vector<Literal> condition;
  double prob = 0.0;
  SourcePos pos;
};

struct SortDecl {
  std::string name;
  std::vector<std::string> objects;
  SourcePos pos;
};

// name : s1, ..., sk -> range.   or   name : range.
// range is a declared sort name or the builtin "boolean".
struct AttrDecl {
  std::string name;
  std::vector<std::string> arg_sorts;
  std::string range;
  SourcePos pos;
};

struct Program {
  std::vector<SortDecl> sorts;
  std::vector<AttrDecl> attrs;
  std::vector<Rule> rules;
  std::vector<RandomSelection> randoms;
  std::vector<PrAtom> pratoms;

  void append(const Program& other);
  std::string to_text() const;  // pretty-printer; reparses to the same program
};

// Parses a full program. Declarations must precede use; bundles that split
// declarations across files are parsed as concatenated text.
Program parse_program(const std::string& text);

// Parses a single ground literal such as "task(coffee,lab,alice)",
// "-sunny(rw0,cl2)" or "curr_time=morning" (no naf, no variables).
Literal parse_literal(const std::string& text);

std::string to_string(const Literal& lit);
std::string to_string(const Atom& atom);

}  // namespace kbplan::plog
