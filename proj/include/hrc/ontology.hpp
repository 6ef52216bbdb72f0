#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hrc/formula.hpp"
#include "hrc/world_map.hpp"

namespace hrc {

struct Interval {
  double min = 0.0;
  double max = 0.0;

  [[nodiscard]] bool contains(double v) const { return v >= min && v <= max; }
  [[nodiscard]] bool within(const Interval& outer) const { return min >= outer.min && max <= outer.max; }
  bool operator==(const Interval& other) const = default;
};

enum class AttributeDomain { Number, Enumeration, Text, Boolean };

struct AttributeDef {
  std::string name;
  AttributeDomain domain = AttributeDomain::Number;
  std::string unit;                         // Number only; compared by equality
  std::optional<Interval> interval;         // Number only
  std::vector<std::string> allowed;         // Enumeration symbols
};

// An attribute as carried by a type, with an optional tightened range.
struct AttributeRef {
  std::string name;
  std::optional<Interval> interval;
  std::optional<std::vector<std::string>> allowed;
  bool required = true;
};

enum class ArgumentKind { Object, Attribute };
enum class RelationSemantics { Extensional, Computed };

struct RelationDef {
  std::string name;
  std::size_t arity = 0;
  std::vector<ArgumentKind> argument_kinds;
  RelationSemantics semantics = RelationSemantics::Extensional;
  // Argument positions naming a place; used for operation ranges and regions.
  std::vector<std::size_t> location_args;
  // Whether an asserted/retracted tuple can be undone by a compensation.
  bool invertible = true;
};

struct SubobjectRequirement {
  std::string type;
  std::size_t multiplicity = 1;
  bool exact = false;  // exact count, otherwise a minimum
  std::string role;    // empty: any role
};

enum class TypeKind { Root, PhysicalLeaf, AbstractLeaf, Intermediate };

struct TypeDef {
  std::string name;
  std::string parent;
  std::vector<AttributeRef> attributes;
  std::vector<SubobjectRequirement> subobjects;
  // Formulas over `?self`, evaluated against the map holding the instance.
  std::vector<Formula> constraints;
};

struct Violation {
  std::string object_id;
  std::string rule;
  std::string message;

  bool operator==(const Violation& other) const = default;
};

struct ValidationReport {
  std::vector<Violation> violations;

  [[nodiscard]] bool ok() const { return violations.empty(); }
};

class Ontology {
 public:
  // Tree with only Object, PhysicalObject and AbstractObject; no vocabulary.
  Ontology();

  void add_attribute(AttributeDef def);
  void add_relation(RelationDef def);
  void add_type(TypeDef def);

  [[nodiscard]] bool has_type(const std::string& name) const { return types_.count(name) != 0; }
  [[nodiscard]] const TypeDef& type(const std::string& name) const;
  [[nodiscard]] TypeKind kind(const std::string& name) const;
  [[nodiscard]] bool is_physical(const std::string& name) const;
  [[nodiscard]] std::vector<std::string> type_names() const;
  [[nodiscard]] std::vector<std::string> children(const std::string& name) const;

  [[nodiscard]] bool is_subtype(const std::string& a, const std::string& b) const;

  // Inherited + own attributes with the tightest applicable constraint.
  [[nodiscard]] std::map<std::string, AttributeRef> effective_attributes(const std::string& type) const;
  [[nodiscard]] std::vector<SubobjectRequirement> effective_subobjects(const std::string& type) const;
  [[nodiscard]] std::vector<Formula> effective_constraints(const std::string& type) const;

  [[nodiscard]] const AttributeDef* attribute(const std::string& name) const;
  [[nodiscard]] const RelationDef* relation(const std::string& name) const;
  [[nodiscard]] const std::map<std::string, RelationDef>& relations() const { return relations_; }
  [[nodiscard]] const std::map<std::string, AttributeDef>& attributes() const { return attributes_; }
  [[nodiscard]] bool has_function(const std::string& name) const { return functions_.count(name) != 0; }

 private:
  void check_constraint(const AttributeDef& def, const AttributeRef& ref,
                        const std::optional<AttributeRef>& inherited, const std::string& type) const;

  std::map<std::string, TypeDef> types_;
  std::map<std::string, std::vector<std::string>> children_;
  std::map<std::string, AttributeDef> attributes_;
  std::map<std::string, RelationDef> relations_;
  std::set<std::string> functions_;
};

Ontology register_type(Ontology ontology, TypeDef def);

// The upper ontology for human-robot collaboration with its attribute
// and relation vocabulary (isIn, isAdjacentTo and the comparison relations).
Ontology builtin_ontology();

bool is_subtype(const Ontology& ontology, const std::string& a, const std::string& b);

// Checks vocabulary, arity and argument kinds. Throws UnknownRelation,
// ArityMismatch, ArgumentKindMismatch or UnknownFunction.
void validate_formula(const Ontology& ontology, const Formula& formula);

ValidationReport validate_instance(const Ontology& ontology, const WorldMap& map, const std::string& id);

// Every object plus every relation tuple of the map.
ValidationReport validate_map(const Ontology& ontology, const WorldMap& map);

// Object ids at location positions of the given atoms (ground arguments only).
std::set<std::string> locations_of(const Ontology& ontology, const std::vector<Atom>& atoms);

}  // namespace hrc
