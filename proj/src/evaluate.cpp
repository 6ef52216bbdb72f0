#include "hrc/evaluate.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <set>

#include "hrc/error.hpp"

namespace hrc {

namespace {

struct Operand {
  bool is_object = false;
  std::string object;
  Literal value{0.0};

  bool operator==(const Operand& other) const {
    if (is_object != other.is_object) return false;
    return is_object ? object == other.object : value == other.value;
  }
};

const Term& resolve_variable(const Term& t, const Binding& binding) {
  if (!t.is_variable()) return t;
  auto it = binding.find(t.name);
  if (it == binding.end()) throw Error(Errc::UnboundVariable, "?" + t.name);
  return it->second;
}

std::optional<Operand> operand_of(const Term& raw, const WorldMap& map, const Binding& binding) {
  const Term& t = resolve_variable(raw, binding);
  switch (t.kind) {
    case Term::Kind::Object:
      if (!map.has_object(t.name)) throw Error(Errc::UnknownObject, t.name);
      return Operand{true, t.name, {}};
    case Term::Kind::Value:
      return Operand{false, {}, t.value};
    case Term::Kind::Function: {
      if (t.name != "attr" || t.args.size() != 2) {
        throw Error(Errc::UnknownFunction, t.name + " has no evaluation semantics");
      }
      const auto owner = operand_of(t.args[0], map, binding);
      const auto name = operand_of(t.args[1], map, binding);
      if (!owner || !owner->is_object || !name || name->is_object ||
          !std::holds_alternative<std::string>(name->value)) {
        throw Error(Errc::ArgumentKindMismatch, "attr(object, \"name\") expected");
      }
      auto v = map.attribute(owner->object, std::get<std::string>(name->value));
      if (!v) return std::nullopt;
      return Operand{false, {}, *v};
    }
    case Term::Kind::Variable:
      break;
  }
  throw Error(Errc::UnboundVariable, to_string(t));
}

bool compare(const std::string& rel, const std::optional<Operand>& a, const std::optional<Operand>& b) {
  if (!a || !b) return false;
  if (rel == "eq") return *a == *b;
  if (rel == "neq") return !(*a == *b);
  const auto* x = a->is_object ? nullptr : std::get_if<double>(&a->value);
  const auto* y = b->is_object ? nullptr : std::get_if<double>(&b->value);
  if (!x || !y) return false;
  if (rel == "lt") return *x < *y;
  if (rel == "le") return *x <= *y;
  if (rel == "gt") return *x > *y;
  return *x >= *y;
}

Atom ground_tuple(const Atom& atom, const WorldMap& map, const Binding& binding) {
  Atom out;
  out.relation = atom.relation;
  out.args.reserve(atom.args.size());
  for (const auto& raw : atom.args) {
    const Term& t = resolve_variable(raw, binding);
    if (t.kind == Term::Kind::Function) {
      throw Error(Errc::MalformedFormula, "function term in extensional atom " + to_string(atom));
    }
    if (t.kind == Term::Kind::Object && !map.has_object(t.name)) {
      throw Error(Errc::UnknownObject, t.name);
    }
    out.args.push_back(t);
  }
  return out;
}

bool eval_propositional(const Formula& f, const std::map<Atom, bool>& valuation) {
  switch (f.kind) {
    case Formula::Kind::True:
      return true;
    case Formula::Kind::Atom: {
      const bool v = valuation.at(f.atom.positive());
      return f.atom.negated ? !v : v;
    }
    case Formula::Kind::And:
      return std::all_of(f.children.begin(), f.children.end(),
                         [&](const Formula& c) { return eval_propositional(c, valuation); });
    case Formula::Kind::Or:
      return std::any_of(f.children.begin(), f.children.end(),
                         [&](const Formula& c) { return eval_propositional(c, valuation); });
  }
  return false;
}

void check_term_domain(const Term& t, const std::set<std::string>& domain) {
  if (t.is_variable()) throw Error(Errc::MalformedFormula, "entails requires ground formulas");
  if (t.kind == Term::Kind::Object && !domain.count(t.name)) throw Error(Errc::UnknownObject, t.name);
  for (const auto& a : t.args) check_term_domain(a, domain);
}

class BindingSearch {
 public:
  BindingSearch(const Formula& f, const WorldMap& map, const Binding& partial)
      : f_(f), map_(map) {
    for (const auto& v : free_variables(f)) {
      if (!partial.count(v)) vars_.push_back(v);
    }
    for (const auto& [id, obj] : map.objects()) objects_.push_back(id);
    if (f.is_conjunctive()) {
      for (const auto& a : conjuncts(f)) {
        if (!a.negated && !is_computed_relation(a.relation)) joins_.push_back(a);
      }
    }
    join(0, partial);
  }

  std::vector<Binding> take() { return {results_.begin(), results_.end()}; }

 private:
  void join(std::size_t i, const Binding& b) {
    if (i == joins_.size()) {
      enumerate(0, b);
      return;
    }
    const Atom& pattern = joins_[i];
    Atom probe;
    probe.relation = pattern.relation;
    for (auto it = map_.tuples().lower_bound(probe);
         it != map_.tuples().end() && it->relation == pattern.relation; ++it) {
      Binding next = b;
      if (!match_atom(pattern, *it, next)) continue;
      if (!new_values_are_objects(b, next)) continue;
      join(i + 1, next);
    }
  }

  bool new_values_are_objects(const Binding& before, const Binding& after) const {
    for (const auto& [name, value] : after) {
      if (before.count(name)) continue;
      if (value.kind != Term::Kind::Object || !map_.has_object(value.name)) return false;
    }
    return true;
  }

  void enumerate(std::size_t v, const Binding& b) {
    while (v < vars_.size() && b.count(vars_[v])) ++v;
    if (v == vars_.size()) {
      if (evaluate(f_, map_, b)) results_.insert(b);
      return;
    }
    for (const auto& id : objects_) {
      Binding next = b;
      next.emplace(vars_[v], Term::object(id));
      enumerate(v + 1, next);
    }
  }

  const Formula& f_;
  const WorldMap& map_;
  std::vector<std::string> vars_;
  std::vector<std::string> objects_;
  std::vector<Atom> joins_;
  std::set<Binding> results_;
};

}  // namespace

const std::vector<std::string>& computed_relation_names() {
  static const std::vector<std::string> names{"eq", "ge", "gt", "le", "lt", "neq"};
  return names;
}

bool is_computed_relation(const std::string& name) {
  const auto& names = computed_relation_names();
  return std::binary_search(names.begin(), names.end(), name);
}

bool evaluate(const Atom& atom, const WorldMap& map, const Binding& binding) {
  bool value = false;
  if (is_computed_relation(atom.relation)) {
    if (atom.args.size() != 2) throw Error(Errc::ArityMismatch, to_string(atom));
    value = compare(atom.relation, operand_of(atom.args[0], map, binding),
                    operand_of(atom.args[1], map, binding));
  } else {
    value = map.holds(ground_tuple(atom, map, binding));
  }
  return atom.negated ? !value : value;
}

bool evaluate(const Formula& f, const WorldMap& map, const Binding& binding) {
  switch (f.kind) {
    case Formula::Kind::True:
      return true;
    case Formula::Kind::Atom:
      return evaluate(f.atom, map, binding);
    case Formula::Kind::And:
      for (const auto& c : f.children) {
        if (!evaluate(c, map, binding)) return false;
      }
      return true;
    case Formula::Kind::Or:
      for (const auto& c : f.children) {
        if (evaluate(c, map, binding)) return true;
      }
      return false;
  }
  return false;
}

std::vector<Binding> satisfying_bindings(const Formula& f, const WorldMap& map) {
  return satisfying_bindings(f, map, Binding{});
}

std::vector<Binding> satisfying_bindings(const Formula& f, const WorldMap& map,
                                         const Binding& partial) {
  return BindingSearch(f, map, partial).take();
}

bool apply_effect_atom(WorldMap& map, const Atom& atom) {
  if (!atom.is_ground()) throw Error(Errc::UnboundVariable, to_string(atom));
  if (!is_computed_relation(atom.relation)) {
    for (const auto& t : atom.args) {
      if (t.kind != Term::Kind::Object) throw Error(Errc::MalformedFormula, to_string(atom));
      if (!map.has_object(t.name)) throw Error(Errc::UnknownObject, t.name);
    }
    return atom.negated ? map.retract_atom(atom.positive()) : map.assert_atom(atom);
  }
  const bool assignment = atom.relation == "eq" && !atom.negated && atom.args.size() == 2 &&
                          atom.args[0].kind == Term::Kind::Function && atom.args[0].name == "attr" &&
                          atom.args[0].args.size() == 2 && atom.args[0].args[0].kind == Term::Kind::Object &&
                          atom.args[0].args[1].kind == Term::Kind::Value &&
                          std::holds_alternative<std::string>(atom.args[0].args[1].value) &&
                          atom.args[1].kind == Term::Kind::Value;
  if (!assignment) throw Error(Errc::MalformedFormula, "not an applicable effect: " + to_string(atom));
  const std::string& id = atom.args[0].args[0].name;
  const std::string& name = std::get<std::string>(atom.args[0].args[1].value);
  const ObjectInstance& obj = map.object(id);
  auto it = obj.attributes.find(name);
  if (it != obj.attributes.end() && it->second.value == atom.args[1].value) return false;
  map.set_attribute(id, name, AttributeValue{atom.args[1].value, it == obj.attributes.end() ? "" : it->second.unit});
  return true;
}

bool entails(const Formula& phi, const Formula& psi, const std::vector<std::string>& domain) {
  const std::set<std::string> universe(domain.begin(), domain.end());
  std::set<Atom> atoms;
  for (const Formula* f : {&phi, &psi}) {
    for (const auto& a : all_atoms(*f)) {
      for (const auto& t : a.args) check_term_domain(t, universe);
      atoms.insert(a.positive());
    }
  }
  if (atoms.size() > 20) {
    throw Error(Errc::DomainTooLarge, std::to_string(atoms.size()) + " atoms mentioned");
  }
  const std::vector<Atom> order(atoms.begin(), atoms.end());
  std::map<Atom, bool> valuation;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << order.size()); ++mask) {
    for (std::size_t i = 0; i < order.size(); ++i) valuation[order[i]] = (mask >> i) & 1U;
    if (eval_propositional(phi, valuation) && !eval_propositional(psi, valuation)) return false;
  }
  return true;
}

}  // namespace hrc
