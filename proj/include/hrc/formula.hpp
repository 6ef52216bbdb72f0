#pragma once

// Situation-description language: quantifier-free formulas over relation
// atoms with and/or, atom-level negation, variables and function terms.
//
// Concrete syntax:
//   formula := disj
//   disj    := conj ("or" conj)*
//   conj    := prim ("and" prim)*
//   prim    := "(" formula ")" | "not" atom | "true" | atom
//   atom    := IDENT "(" term ("," term)* ")"
//   term    := "?" IDENT | IDENT | NUMBER | STRING | "true" | "false"
//            | IDENT "(" term ("," term)* ")"
//
// Inside an atom, `name(...)` is a function application; bare identifiers
// are object references.

#include <compare>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace hrc {

using Literal = std::variant<double, std::string, bool>;

std::string literal_to_string(const Literal& value);

struct Term {
  enum class Kind { Variable, Object, Value, Function };

  Kind kind = Kind::Object;
  std::string name;  // variable name (no '?'), object id, or function name
  Literal value{0.0};
  std::vector<Term> args;

  static Term variable(std::string name);
  static Term object(std::string id);
  static Term literal(Literal value);
  static Term function(std::string name, std::vector<Term> args);

  [[nodiscard]] bool is_variable() const { return kind == Kind::Variable; }
  [[nodiscard]] bool is_ground() const;

  bool operator==(const Term& other) const;
  std::strong_ordering operator<=>(const Term& other) const;
};

struct Atom {
  std::string relation;
  std::vector<Term> args;
  bool negated = false;

  [[nodiscard]] bool is_ground() const;
  // The same atom with negation cleared.
  [[nodiscard]] Atom positive() const;

  bool operator==(const Atom& other) const;
  std::strong_ordering operator<=>(const Atom& other) const;
};

struct Formula {
  enum class Kind { True, Atom, And, Or };

  Kind kind = Kind::True;
  hrc::Atom atom;
  std::vector<Formula> children;

  static Formula truth();
  static Formula of(hrc::Atom atom);
  static Formula conjunction(std::vector<Formula> children);
  static Formula disjunction(std::vector<Formula> children);

  [[nodiscard]] bool is_true() const { return kind == Kind::True; }
  // True when the formula is `true`, an atom, or an `and` of atoms/true.
  [[nodiscard]] bool is_conjunctive() const;

  bool operator==(const Formula& other) const = default;
};

// A task changes a local situation: precondition -> effect.
struct Task {
  Formula precondition = Formula::truth();
  Formula effect = Formula::truth();

  bool operator==(const Task& other) const = default;
};

// Variable name (without '?') -> ground term (object ref or literal).
using Binding = std::map<std::string, Term>;

Formula parse(std::string_view text);

std::string to_string(const Term& term);
std::string to_string(const Atom& atom);
std::string to_string(const Formula& formula);
std::string to_string(const Task& task);
std::string to_string(const Binding& binding);

std::set<std::string> free_variables(const Formula& formula);
std::set<std::string> free_variables(const Atom& atom);

Term substitute(const Term& term, const Binding& binding);
Atom substitute(const Atom& atom, const Binding& binding);
Formula substitute(const Formula& formula, const Binding& binding);
Task substitute(const Task& task, const Binding& binding);

// Atoms of a conjunctive formula in source order (empty for `true`).
// Throws DisjunctiveEffect for formulas containing `or`.
std::vector<Atom> conjuncts(const Formula& formula);

// Every atom occurring anywhere in the formula, in source order.
std::vector<Atom> all_atoms(const Formula& formula);

// Conjunction of the given atoms; `true` when empty, the atom itself when single.
Formula conjoin(const std::vector<Atom>& atoms);

// Syntactic matching of `pattern` onto a ground-or-constant `target` atom:
// variables in the pattern are bound, everything else must be equal.
// Extends `binding` on success; leaves it unchanged on failure.
bool match_atom(const Atom& pattern, const Atom& target, Binding& binding);

}  // namespace hrc
