#include "hrc/ontology.hpp"

#include <algorithm>

#include "hrc/error.hpp"
#include "hrc/evaluate.hpp"

namespace hrc {

namespace {

constexpr const char* kRoot = "Object";
constexpr const char* kPhysical = "PhysicalObject";
constexpr const char* kAbstract = "AbstractObject";

bool subset_of(const std::vector<std::string>& inner, const std::vector<std::string>& outer) {
  return std::all_of(inner.begin(), inner.end(), [&](const std::string& s) {
    return std::find(outer.begin(), outer.end(), s) != outer.end();
  });
}

std::string describe(const Literal& v) { return literal_to_string(v); }

void check_term_kinds(const Ontology& ontology, const Term& t) {
  if (t.kind != Term::Kind::Function) return;
  if (!ontology.has_function(t.name)) throw Error(Errc::UnknownFunction, t.name);
  for (const auto& a : t.args) check_term_kinds(ontology, a);
}

class Validator {
 public:
  Validator(const Ontology& ontology, const WorldMap& map) : ontology_(ontology), map_(map) {}

  void object(const std::string& id) {
    if (!visited_.insert(id).second) return;
    const ObjectInstance& obj = map_.object(id);
    if (!ontology_.has_type(obj.type)) {
      add(id, "unknown-type", "type " + obj.type + " is not in the ontology");
      return;
    }
    const TypeKind kind = ontology_.kind(obj.type);
    if (kind == TypeKind::Intermediate || kind == TypeKind::Root) {
      add(id, "intermediate-type", "type " + obj.type + " is not a leaf and cannot be instantiated");
    }
    attributes(obj);
    subobjects(obj);
    constraints(obj);
  }

  void tuples() {
    for (const auto& tuple : map_.tuples()) {
      const std::string where = to_string(tuple);
      const RelationDef* rel = ontology_.relation(tuple.relation);
      if (!rel) {
        add(where, "unknown-relation", "relation " + tuple.relation + " is not declared");
        continue;
      }
      if (rel->semantics != RelationSemantics::Extensional) {
        add(where, "computed-relation", "computed relations cannot be stored as tuples");
        continue;
      }
      if (tuple.args.size() != rel->arity) {
        add(where, "arity", "expected " + std::to_string(rel->arity) + " arguments");
        continue;
      }
      for (std::size_t i = 0; i < tuple.args.size(); ++i) {
        const Term& t = tuple.args[i];
        if (rel->argument_kinds[i] == ArgumentKind::Object) {
          if (t.kind != Term::Kind::Object || !map_.has_object(t.name)) {
            add(where, "tuple-argument", "argument " + std::to_string(i) + " must be an existing object");
          }
        } else if (t.kind != Term::Kind::Value) {
          add(where, "tuple-argument", "argument " + std::to_string(i) + " must be a value");
        }
      }
    }
  }

  ValidationReport take() { return std::move(report_); }

 private:
  void add(const std::string& id, std::string rule, std::string message) {
    report_.violations.push_back(Violation{id, std::move(rule), std::move(message)});
  }

  void attributes(const ObjectInstance& obj) {
    const auto effective = ontology_.effective_attributes(obj.type);
    for (const auto& [name, ref] : effective) {
      auto it = obj.attributes.find(name);
      if (it == obj.attributes.end()) {
        if (ref.required) add(obj.id, "missing-attribute", "attribute " + name + " has no value");
        continue;
      }
      check_value(obj.id, *ontology_.attribute(name), ref, it->second);
    }
    for (const auto& [name, value] : obj.attributes) {
      if (!effective.count(name)) {
        add(obj.id, "unknown-attribute", "attribute " + name + " is not declared for " + obj.type);
      }
    }
  }

  void check_value(const std::string& id, const AttributeDef& def, const AttributeRef& ref,
                   const AttributeValue& v) {
    switch (def.domain) {
      case AttributeDomain::Number: {
        const auto* d = std::get_if<double>(&v.value);
        if (!d) {
          add(id, "domain", def.name + " must be a number");
          return;
        }
        if (!v.unit.empty() && !def.unit.empty() && v.unit != def.unit) {
          add(id, "unit", def.name + " has unit " + v.unit + ", expected " + def.unit);
        }
        const auto& bound = ref.interval ? ref.interval : def.interval;
        if (bound && !bound->contains(*d)) {
          add(id, "range", def.name + " = " + describe(v.value) + " outside [" +
                               literal_to_string(bound->min) + ", " + literal_to_string(bound->max) + "]");
        }
        return;
      }
      case AttributeDomain::Enumeration: {
        const auto* s = std::get_if<std::string>(&v.value);
        if (!s) {
          add(id, "domain", def.name + " must be a symbol");
          return;
        }
        const auto& allowed = ref.allowed ? *ref.allowed : def.allowed;
        if (!allowed.empty() && std::find(allowed.begin(), allowed.end(), *s) == allowed.end()) {
          add(id, "range", def.name + " = " + *s + " is not an allowed symbol");
        }
        return;
      }
      case AttributeDomain::Text:
        if (!std::holds_alternative<std::string>(v.value)) add(id, "domain", def.name + " must be text");
        return;
      case AttributeDomain::Boolean:
        if (!std::holds_alternative<bool>(v.value)) add(id, "domain", def.name + " must be a boolean");
        return;
    }
  }

  void subobjects(const ObjectInstance& obj) {
    for (const auto& [role, ids] : obj.subobjects) {
      for (const auto& sub : ids) {
        if (!map_.has_object(sub)) add(obj.id, "unknown-subobject", role + " refers to missing object " + sub);
      }
    }
    for (const auto& req : ontology_.effective_subobjects(obj.type)) {
      std::size_t count = 0;
      for (const auto& [role, ids] : obj.subobjects) {
        if (!req.role.empty() && role != req.role) continue;
        for (const auto& sub : ids) {
          const ObjectInstance* s = map_.find_object(sub);
          if (s && ontology_.has_type(s->type) && ontology_.is_subtype(s->type, req.type)) ++count;
        }
      }
      const std::string label = req.role.empty() ? req.type : req.role + ":" + req.type;
      if (count == 0) {
        add(obj.id, "missing-subobject", "missing obligatory sub-object " + label);
      } else if (req.exact ? count != req.multiplicity : count < req.multiplicity) {
        add(obj.id, "multiplicity", label + " count " + std::to_string(count) + ", expected " +
                                        (req.exact ? "" : "at least ") + std::to_string(req.multiplicity));
      }
    }
    for (const auto& [role, ids] : obj.subobjects) {
      for (const auto& sub : ids) {
        if (map_.has_object(sub)) object(sub);
      }
    }
  }

  void constraints(const ObjectInstance& obj) {
    const Binding self{{"self", Term::object(obj.id)}};
    for (const auto& c : ontology_.effective_constraints(obj.type)) {
      try {
        if (!evaluate(c, map_, self)) add(obj.id, "constraint", "constraint violated: " + to_string(c));
      } catch (const Error& e) {
        add(obj.id, "constraint", "constraint " + to_string(c) + " not decidable: " + e.what());
      }
    }
  }

  const Ontology& ontology_;
  const WorldMap& map_;
  std::set<std::string> visited_;
  ValidationReport report_;
};

}  // namespace

Ontology::Ontology() {
  types_[kRoot] = TypeDef{kRoot, "", {}, {}, {}};
  types_[kPhysical] = TypeDef{kPhysical, kRoot, {}, {}, {}};
  types_[kAbstract] = TypeDef{kAbstract, kRoot, {}, {}, {}};
  children_[kRoot] = {kAbstract, kPhysical};
  functions_ = {"action", "attr", "range"};
  for (const auto& name : computed_relation_names()) {
    relations_[name] = RelationDef{name, 2, {ArgumentKind::Attribute, ArgumentKind::Attribute},
                                   RelationSemantics::Computed, {}, false};
  }
}

void Ontology::add_attribute(AttributeDef def) {
  if (def.name.empty() || attributes_.count(def.name)) throw Error(Errc::DuplicateName, "attribute " + def.name);
  if (def.interval && def.interval->min > def.interval->max) {
    throw Error(Errc::InvalidDefinition, "empty interval for attribute " + def.name);
  }
  if (def.interval && def.domain != AttributeDomain::Number) {
    throw Error(Errc::InvalidDefinition, "interval on non-numeric attribute " + def.name);
  }
  attributes_[def.name] = std::move(def);
}

void Ontology::add_relation(RelationDef def) {
  if (def.name.empty() || relations_.count(def.name)) throw Error(Errc::DuplicateName, "relation " + def.name);
  if (def.arity == 0 || def.argument_kinds.size() != def.arity) {
    throw Error(Errc::InvalidDefinition, "relation " + def.name + " needs arity >= 1 and one kind per argument");
  }
  if (def.semantics == RelationSemantics::Computed) {
    throw Error(Errc::InvalidDefinition, "computed relation " + def.name + " has no decision procedure");
  }
  for (auto pos : def.location_args) {
    if (pos >= def.arity || def.argument_kinds[pos] != ArgumentKind::Object) {
      throw Error(Errc::InvalidDefinition, "bad location argument for relation " + def.name);
    }
  }
  relations_[def.name] = std::move(def);
}

void Ontology::check_constraint(const AttributeDef& def, const AttributeRef& ref,
                                const std::optional<AttributeRef>& inherited, const std::string& type) const {
  if (ref.interval) {
    if (def.domain != AttributeDomain::Number || ref.interval->min > ref.interval->max) {
      throw Error(Errc::InvalidDefinition, type + ": invalid interval on " + ref.name);
    }
    const auto& base = inherited && inherited->interval ? inherited->interval : def.interval;
    if (base && !ref.interval->within(*base)) {
      throw Error(Errc::RangeNotSubsetOfParent, type + ": range of " + ref.name + " exceeds inherited range");
    }
  }
  if (ref.allowed) {
    if (def.domain != AttributeDomain::Enumeration) {
      throw Error(Errc::InvalidDefinition, type + ": allowed set on non-enumeration " + ref.name);
    }
    const auto& base = inherited && inherited->allowed ? *inherited->allowed : def.allowed;
    if (!base.empty() && !subset_of(*ref.allowed, base)) {
      throw Error(Errc::RangeNotSubsetOfParent, type + ": allowed set of " + ref.name + " exceeds inherited set");
    }
  }
}

void Ontology::add_type(TypeDef def) {
  if (def.name.empty() || types_.count(def.name)) throw Error(Errc::DuplicateName, "type " + def.name);
  if (!types_.count(def.parent)) throw Error(Errc::UnknownParent, def.name + " -> " + def.parent);
  if (def.parent == kRoot) {
    throw Error(Errc::InvalidDefinition, def.name + ": the root only has the physical and abstract branches");
  }
  const auto inherited = effective_attributes(def.parent);
  for (const auto& ref : def.attributes) {
    const AttributeDef* adef = attribute(ref.name);
    if (!adef) throw Error(Errc::UnknownAttribute, def.name + ": " + ref.name);
    auto it = inherited.find(ref.name);
    check_constraint(*adef, ref, it == inherited.end() ? std::nullopt : std::optional(it->second), def.name);
  }
  const bool physical = is_subtype(def.parent, kPhysical);
  for (const auto& req : def.subobjects) {
    if (!types_.count(req.type)) throw Error(Errc::UnresolvedSubobjectType, def.name + ": " + req.type);
    if (physical && !is_physical(req.type)) {
      throw Error(Errc::UnresolvedSubobjectType, def.name + ": physical type with abstract part " + req.type);
    }
    if (req.multiplicity == 0) throw Error(Errc::InvalidDefinition, def.name + ": multiplicity must be >= 1");
  }
  for (const auto& c : def.constraints) validate_formula(*this, c);
  children_[def.parent].push_back(def.name);
  std::sort(children_[def.parent].begin(), children_[def.parent].end());
  types_[def.name] = std::move(def);
}

const TypeDef& Ontology::type(const std::string& name) const {
  auto it = types_.find(name);
  if (it == types_.end()) throw Error(Errc::UnknownType, name);
  return it->second;
}

TypeKind Ontology::kind(const std::string& name) const {
  const TypeDef& t = type(name);
  if (t.parent.empty()) return TypeKind::Root;
  auto it = children_.find(name);
  if (it != children_.end() && !it->second.empty()) return TypeKind::Intermediate;
  if (name == kPhysical || name == kAbstract) return TypeKind::Intermediate;
  return is_physical(name) ? TypeKind::PhysicalLeaf : TypeKind::AbstractLeaf;
}

bool Ontology::is_physical(const std::string& name) const { return is_subtype(name, kPhysical); }

std::vector<std::string> Ontology::type_names() const {
  std::vector<std::string> out;
  for (const auto& [name, t] : types_) out.push_back(name);
  return out;
}

std::vector<std::string> Ontology::children(const std::string& name) const {
  (void)type(name);
  auto it = children_.find(name);
  return it == children_.end() ? std::vector<std::string>{} : it->second;
}

bool Ontology::is_subtype(const std::string& a, const std::string& b) const {
  (void)type(b);
  for (const TypeDef* t = &type(a);; t = &type(t->parent)) {
    if (t->name == b) return true;
    if (t->parent.empty()) return false;
  }
}

std::map<std::string, AttributeRef> Ontology::effective_attributes(const std::string& name) const {
  std::vector<const TypeDef*> chain;
  for (const TypeDef* t = &type(name);; t = &type(t->parent)) {
    chain.push_back(t);
    if (t->parent.empty()) break;
  }
  std::map<std::string, AttributeRef> out;
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
    for (const auto& ref : (*it)->attributes) {
      auto found = out.find(ref.name);
      if (found == out.end()) {
        out[ref.name] = ref;
        continue;
      }
      if (ref.interval) found->second.interval = ref.interval;
      if (ref.allowed) found->second.allowed = ref.allowed;
      found->second.required = ref.required;
    }
  }
  return out;
}

std::vector<SubobjectRequirement> Ontology::effective_subobjects(const std::string& name) const {
  std::vector<SubobjectRequirement> out;
  for (const TypeDef* t = &type(name);; t = &type(t->parent)) {
    out.insert(out.end(), t->subobjects.begin(), t->subobjects.end());
    if (t->parent.empty()) break;
  }
  return out;
}

std::vector<Formula> Ontology::effective_constraints(const std::string& name) const {
  std::vector<Formula> out;
  for (const TypeDef* t = &type(name);; t = &type(t->parent)) {
    out.insert(out.end(), t->constraints.begin(), t->constraints.end());
    if (t->parent.empty()) break;
  }
  return out;
}

const AttributeDef* Ontology::attribute(const std::string& name) const {
  auto it = attributes_.find(name);
  return it == attributes_.end() ? nullptr : &it->second;
}

const RelationDef* Ontology::relation(const std::string& name) const {
  auto it = relations_.find(name);
  return it == relations_.end() ? nullptr : &it->second;
}

Ontology register_type(Ontology ontology, TypeDef def) {
  ontology.add_type(std::move(def));
  return ontology;
}

bool is_subtype(const Ontology& ontology, const std::string& a, const std::string& b) {
  return ontology.is_subtype(a, b);
}

Ontology builtin_ontology() {
  Ontology o;
  auto number = [](std::string name, std::string unit, double lo, double hi) {
    return AttributeDef{std::move(name), AttributeDomain::Number, std::move(unit), Interval{lo, hi}, {}};
  };
  auto text = [](std::string name) { return AttributeDef{std::move(name), AttributeDomain::Text, {}, {}, {}}; };
  o.add_attribute(number("body_temperature", "C", 30.0, 45.0));
  o.add_attribute(number("heart_rate", "bpm", 20.0, 250.0));
  o.add_attribute(number("blood_pressure", "mmHg", 40.0, 250.0));
  // Sensed attributes of a SimpleSensor.
  o.add_attribute(number("temperature", "C", -50.0, 150.0));
  o.add_attribute(number("humidity", "%", 0.0, 100.0));
  o.add_attribute(number("light_intensity", "lx", 0.0, 200000.0));
  o.add_attribute(number("co_pollution", "ppm", 0.0, 1000.0));
  o.add_attribute(text("ToolList"));
  o.add_attribute(text("PreferredEnvironment"));
  o.add_attribute(text("position"));

  using K = ArgumentKind;
  o.add_relation(RelationDef{"isIn", 2, {K::Object, K::Object}, RelationSemantics::Extensional, {1}, true});
  o.add_relation(
      RelationDef{"isAdjacentTo", 2, {K::Object, K::Object}, RelationSemantics::Extensional, {0, 1}, true});

  auto add = [&o](std::string name, std::string parent, std::vector<AttributeRef> attrs = {},
                  std::vector<SubobjectRequirement> subs = {}) {
    o.add_type(TypeDef{std::move(name), std::move(parent), std::move(attrs), std::move(subs), {}});
  };
  add("NonlivingElement", kPhysical);
  add("DeviceElement", "NonlivingElement");
  add("RobotElement", "DeviceElement");
  add("ToolElement", "DeviceElement");
  add("SimpleSensor", "DeviceElement",
      {{"temperature", {}, {}, false},
       {"humidity", {}, {}, false},
       {"light_intensity", {}, {}, false},
       {"co_pollution", {}, {}, false}});
  add("LightingElement", "DeviceElement");
  add("LivingElement", kPhysical);
  add("BodyElement", "LivingElement");
  add("HumanBody", "BodyElement",
      {{"body_temperature", {}, {}, true}, {"heart_rate", {}, {}, true}, {"blood_pressure", {}, {}, true}});

  add("Nonliving", kAbstract);
  add("Device", "Nonliving", {{"position", {}, {}, false}});
  add("Robot", "Device");
  add("MobileRobot", "Robot");
  add("RobotWithArm", "Robot");
  add("Platform", "Robot");
  add("RobotWithContainer", "Robot");
  add("Sensor", "Device");
  add("Living", kAbstract);
  add("Human", "Living",
      {{"ToolList", {}, {}, true}, {"PreferredEnvironment", {}, {}, true}, {"position", {}, {}, false}},
      {{"HumanBody", 1, true, "Body"}});
  return o;
}

void validate_formula(const Ontology& ontology, const Formula& formula) {
  for (const auto& atom : all_atoms(formula)) {
    const RelationDef* rel = ontology.relation(atom.relation);
    if (!rel) throw Error(Errc::UnknownRelation, atom.relation);
    if (atom.args.size() != rel->arity) {
      throw Error(Errc::ArityMismatch, to_string(atom) + " expects " + std::to_string(rel->arity) + " arguments");
    }
    for (std::size_t i = 0; i < atom.args.size(); ++i) {
      const Term& t = atom.args[i];
      check_term_kinds(ontology, t);
      const bool object_slot = rel->argument_kinds[i] == ArgumentKind::Object;
      if (object_slot && t.kind != Term::Kind::Object && t.kind != Term::Kind::Variable) {
        throw Error(Errc::ArgumentKindMismatch, to_string(atom) + ": argument " + std::to_string(i) +
                                                    " must be an object");
      }
      if (rel->semantics == RelationSemantics::Extensional && t.kind == Term::Kind::Function) {
        throw Error(Errc::ArgumentKindMismatch, to_string(atom) + ": functions only inside computed relations");
      }
    }
  }
}

ValidationReport validate_instance(const Ontology& ontology, const WorldMap& map, const std::string& id) {
  if (!map.has_object(id)) throw Error(Errc::UnknownObject, id);
  Validator v(ontology, map);
  v.object(id);
  return v.take();
}

ValidationReport validate_map(const Ontology& ontology, const WorldMap& map) {
  Validator v(ontology, map);
  for (const auto& [id, obj] : map.objects()) v.object(id);
  v.tuples();
  return v.take();
}

std::set<std::string> locations_of(const Ontology& ontology, const std::vector<Atom>& atoms) {
  std::set<std::string> out;
  for (const auto& a : atoms) {
    const RelationDef* rel = ontology.relation(a.relation);
    if (!rel) continue;
    for (auto pos : rel->location_args) {
      if (pos < a.args.size() && a.args[pos].kind == Term::Kind::Object) out.insert(a.args[pos].name);
    }
  }
  return out;
}

}  // namespace hrc
