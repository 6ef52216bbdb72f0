#include <doctest.h>

#include <random>

#include "hrc/error.hpp"
#include "hrc/evaluate.hpp"
#include "hrc/ontology.hpp"

using namespace hrc;

namespace {

Errc error_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::InvalidDefinition;
}

WorldMap human_map(bool with_body) {
  WorldMap m;
  m.put_object(ObjectInstance{"body1",
                              "HumanBody",
                              {{"body_temperature", {36.6, "C"}},
                               {"heart_rate", {72.0, "bpm"}},
                               {"blood_pressure", {120.0, "mmHg"}}},
                              {}});
  ObjectInstance h{"alice",
                   "Human",
                   {{"ToolList", {std::string("screwdriver wrench"), ""}},
                    {"PreferredEnvironment", {std::string("roomA roomB"), ""}}},
                   {}};
  if (with_body) h.subobjects["Body"] = {"body1"};
  m.put_object(h);
  return m;
}

}  // namespace

TEST_CASE("builtin ontology shape") {
  const Ontology o = builtin_ontology();
  CHECK(is_subtype(o, "MobileRobot", "Robot"));
  CHECK(is_subtype(o, "Human", "Living"));
  CHECK(is_subtype(o, "Object", "Object"));
  CHECK(is_subtype(o, "RobotWithArm", "Device"));
  CHECK(is_subtype(o, "RobotWithArm", "Nonliving"));
  CHECK_FALSE(is_subtype(o, "Human", "Nonliving"));
  CHECK(is_subtype(o, "HumanBody", "LivingElement"));
  CHECK(is_subtype(o, "SimpleSensor", "DeviceElement"));
  CHECK(o.children("Object") == std::vector<std::string>{"AbstractObject", "PhysicalObject"});
  CHECK(o.kind("Human") == TypeKind::AbstractLeaf);
  CHECK(o.kind("HumanBody") == TypeKind::PhysicalLeaf);
  CHECK(o.kind("Robot") == TypeKind::Intermediate);
  CHECK(o.effective_attributes("HumanBody").size() == 3);
  CHECK(error_of([&] { (void)o.is_subtype("Unicorn", "Object"); }) == Errc::UnknownType);
}

TEST_CASE("register Building under Nonliving") {
  Ontology o = builtin_ontology();
  o = register_type(o, TypeDef{"Storey", "Nonliving", {}, {}, {}});
  o = register_type(o, TypeDef{"Room", "Nonliving", {}, {}, {}});
  o = register_type(o, TypeDef{"Stairs", "Nonliving", {}, {}, {}});
  o = register_type(o, TypeDef{"Building", "Nonliving", {}, {{"Storey", 1}, {"Room", 1}, {"Stairs", 1}}, {}});
  CHECK(o.has_type("Building"));
  CHECK(o.kind("Building") == TypeKind::AbstractLeaf);
  CHECK(o.effective_subobjects("Building").size() == 3);
}

TEST_CASE("register_type errors") {
  const Ontology o = builtin_ontology();
  CHECK(error_of([&] { register_type(o, TypeDef{"Loop", "Loop", {}, {}, {}}); }) == Errc::UnknownParent);
  CHECK(error_of([&] { register_type(o, TypeDef{"Human", "Living", {}, {}, {}}); }) == Errc::DuplicateName);
  CHECK(error_of([&] {
          register_type(o, TypeDef{"FeverBody", "HumanBody", {{"body_temperature", Interval{20, 50}}}, {}, {}});
        }) == Errc::RangeNotSubsetOfParent);
  CHECK(error_of([&] { register_type(o, TypeDef{"Ghost", "Nonliving", {}, {{"Nothing", 1}}, {}}); }) ==
        Errc::UnresolvedSubobjectType);
  CHECK(error_of([&] { register_type(o, TypeDef{"Arm", "RobotElement", {}, {{"Robot", 1}}, {}}); }) ==
        Errc::UnresolvedSubobjectType);
  CHECK(error_of([&] { register_type(o, TypeDef{"X", "Nonliving", {{"wingspan"}}, {}, {}}); }) ==
        Errc::UnknownAttribute);
  CHECK(error_of([&] { register_type(o, TypeDef{"Third", "Object", {}, {}, {}}); }) == Errc::InvalidDefinition);
}

TEST_CASE("tightened ranges inherit and are subsets") {
  Ontology o = builtin_ontology();
  o.add_type(TypeDef{"FeverBody", "HumanBody", {{"body_temperature", Interval{38, 42}}}, {}, {}});
  const auto attrs = o.effective_attributes("FeverBody");
  REQUIRE(attrs.size() == 3);
  CHECK(attrs.at("body_temperature").interval == Interval{38, 42});
  CHECK(error_of([&] {
          o.add_type(TypeDef{"HotBody", "FeverBody", {{"body_temperature", Interval{37, 41}}}, {}, {}});
        }) == Errc::RangeNotSubsetOfParent);
  CHECK(o.kind("HumanBody") == TypeKind::Intermediate);
}

TEST_CASE("validate Human instances") {
  const Ontology o = builtin_ontology();
  CHECK(validate_instance(o, human_map(true), "alice").ok());

  const auto missing = validate_instance(o, human_map(false), "alice");
  REQUIRE(missing.violations.size() == 1);
  CHECK(missing.violations[0].rule == "missing-subobject");
  CHECK(missing.violations[0].message.find("missing obligatory sub-object") != std::string::npos);
  CHECK(error_of([&] { validate_instance(o, human_map(true), "bob"); }) == Errc::UnknownObject);
}

TEST_CASE("SimpleSensor out of range yields exactly one violation") {
  const Ontology o = builtin_ontology();
  const double max = o.attribute("temperature")->interval->max;
  WorldMap m;
  m.put_object(ObjectInstance{"s1", "SimpleSensor", {{"temperature", {max + 1, "C"}}, {"humidity", {40.0, "%"}}}, {}});
  const auto report = validate_instance(o, m, "s1");
  REQUIRE(report.violations.size() == 1);
  CHECK(report.violations[0].rule == "range");

  m.put_object(ObjectInstance{"s2", "SimpleSensor", {{"temperature", {max, "K"}}}, {}});
  const auto unit = validate_instance(o, m, "s2");
  REQUIRE(unit.violations.size() == 1);
  CHECK(unit.violations[0].rule == "unit");
}

TEST_CASE("intermediate types cannot be instantiated") {
  const Ontology o = builtin_ontology();
  WorldMap m;
  m.put_object(ObjectInstance{"r", "Robot", {}, {}});
  const auto report = validate_instance(o, m, "r");
  REQUIRE(report.violations.size() == 1);
  CHECK(report.violations[0].rule == "intermediate-type");
}

TEST_CASE("structural constraints and multiplicity") {
  Ontology o = builtin_ontology();
  o.add_attribute(AttributeDef{"legs", AttributeDomain::Number, "", Interval{0, 10}, {}});
  o.add_type(TypeDef{"Leg", "NonlivingElement", {}, {}, {}});
  o.add_type(TypeDef{"Table", "Nonliving", {{"legs"}}, {{"Leg", 3}}, {parse("ge(attr(?self, \"legs\"), 3)")}});
  WorldMap m;
  for (const char* l : {"l1", "l2", "l3"}) m.put_object(ObjectInstance{l, "Leg", {}, {}});
  m.put_object(ObjectInstance{"t", "Table", {{"legs", {3.0, ""}}}, {{"legs", {"l1", "l2", "l3"}}}});
  CHECK(validate_instance(o, m, "t").ok());

  m.put_object(ObjectInstance{"t2", "Table", {{"legs", {2.0, ""}}}, {{"legs", {"l1", "l2"}}}});
  const auto report = validate_instance(o, m, "t2");
  REQUIRE(report.violations.size() == 2);
  CHECK(report.violations[0].rule == "multiplicity");
  CHECK(report.violations[1].rule == "constraint");
}

TEST_CASE("validate_map checks tuples") {
  const Ontology o = builtin_ontology();
  WorldMap m = human_map(true);
  m.assert_atom(parse("isIn(alice, body1)").atom);
  CHECK(validate_map(o, m).ok());
  m.assert_atom(parse("isIn(alice, nowhere)").atom);
  m.assert_atom(parse("flies(alice)").atom);
  CHECK(validate_map(o, m).violations.size() == 2);
}

TEST_CASE("validate_formula") {
  const Ontology o = builtin_ontology();
  validate_formula(o, parse("isIn(?x, roomA) and lt(attr(?x, \"temperature\"), 30)"));
  CHECK(error_of([&] { validate_formula(o, parse("flies(?x)")); }) == Errc::UnknownRelation);
  CHECK(error_of([&] { validate_formula(o, parse("isIn(?x)")); }) == Errc::ArityMismatch);
  CHECK(error_of([&] { validate_formula(o, parse("isIn(?x, 3)")); }) == Errc::ArgumentKindMismatch);
  CHECK(error_of([&] { validate_formula(o, parse("lt(mass(?x), 3)")); }) == Errc::UnknownFunction);
}

TEST_CASE("is_subtype agrees with naive ancestor walk on a random tree") {
  std::mt19937_64 rng(21);
  Ontology o;
  std::map<std::string, std::string> parent;
  std::vector<std::string> names{"PhysicalObject", "AbstractObject"};
  for (int i = 0; i < 50; ++i) {
    const std::string name = "T" + std::to_string(i);
    const std::string p = names[std::uniform_int_distribution<std::size_t>(0, names.size() - 1)(rng)];
    o.add_type(TypeDef{name, p, {}, {}, {}});
    parent[name] = p;
    names.push_back(name);
  }
  parent["PhysicalObject"] = "Object";
  parent["AbstractObject"] = "Object";
  names.push_back("Object");
  auto ancestors = [&](std::string t) {
    std::set<std::string> out{t};
    while (parent.count(t)) out.insert(t = parent[t]);
    return out;
  };
  for (const auto& a : names) {
    const auto anc = ancestors(a);
    for (const auto& b : names) CHECK(o.is_subtype(a, b) == (anc.count(b) == 1));
  }
  // Tree property: every non-root type reachable from the root exactly once.
  std::size_t seen = 0;
  std::vector<std::string> stack{"Object"};
  while (!stack.empty()) {
    const auto t = stack.back();
    stack.pop_back();
    ++seen;
    for (const auto& c : o.children(t)) stack.push_back(c);
  }
  CHECK(seen == o.type_names().size());
}

TEST_CASE("closed-world atom truth equals tuple membership") {
  // Exhaustive over every tuple set of one binary relation on 2 objects
  // and one unary relation on 3 objects (<= 5 objects overall).
  const std::vector<std::string> objs{"a", "b", "c"};
  std::vector<Atom> universe;
  for (const char* x : {"a", "b"}) {
    for (const char* y : {"a", "b"}) universe.push_back(parse(std::string("r(") + x + ", " + y + ")").atom);
  }
  for (const auto& x : objs) universe.push_back(parse("p(" + x + ")").atom);
  for (std::uint32_t mask = 0; mask < (1U << universe.size()); ++mask) {
    WorldMap m;
    for (const auto& x : objs) m.put_object(ObjectInstance{x, "T", {}, {}});
    for (std::size_t i = 0; i < universe.size(); ++i) {
      if (mask >> i & 1U) m.assert_atom(universe[i]);
    }
    for (std::size_t i = 0; i < universe.size(); ++i) {
      const bool member = (mask >> i & 1U) != 0;
      CHECK(evaluate(Formula::of(universe[i]), m) == member);
      Atom neg = universe[i];
      neg.negated = true;
      CHECK(evaluate(Formula::of(neg), m) == !member);
    }
  }
}
