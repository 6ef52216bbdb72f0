#pragma once

// A small lab world shared by the service, planner and simulation tests.

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hrc/ontology.hpp"
#include "hrc/registry.hpp"
#include "hrc/services.hpp"

namespace hrc::testing {

inline Ontology lab_ontology() {
  Ontology o = builtin_ontology();
  using K = ArgumentKind;
  o.add_relation(RelationDef{"humanIn", 1, {K::Object}, RelationSemantics::Extensional, {0}, true});
  o.add_relation(RelationDef{"robotActiveIn", 1, {K::Object}, RelationSemantics::Extensional, {0}, true});
  o.add_relation(RelationDef{"hazard", 1, {K::Object}, RelationSemantics::Extensional, {0}, true});
  o.add_relation(RelationDef{"attached", 2, {K::Object, K::Object}, RelationSemantics::Extensional, {}, false});
  o.add_type(TypeDef{"Room", "Nonliving", {}, {}, {}});
  o.add_type(TypeDef{"Box", "Nonliving", {}, {}, {}});
  return o;
}

inline WorldMap rooms_map(const std::vector<std::string>& rooms,
                          const std::vector<std::pair<std::string, std::string>>& doors) {
  WorldMap m;
  for (const auto& r : rooms) m.put_object(ObjectInstance{r, "Room", {}, {}});
  m.put_object(ObjectInstance{"box1", "Box", {}, {}});
  m.put_object(ObjectInstance{"robot1", "MobileRobot", {}, {}});
  for (const auto& [a, b] : doors) {
    m.assert_atom(parse("isAdjacentTo(" + a + ", " + b + ")").atom);
    m.assert_atom(parse("isAdjacentTo(" + b + ", " + a + ")").atom);
  }
  return m;
}

inline ServiceDescription transport(double cost = 1, std::int64_t time = 2,
                                    std::optional<std::set<std::string>> range = std::nullopt,
                                    std::string marker = "") {
  ServiceDescription d;
  d.type_name = "transport";
  d.kind = ServiceKind::Physical;
  d.inputs = {{"x", "Box"}};
  d.precondition = parse("isIn(?x, ?a) and isAdjacentTo(?a, ?b)");
  d.effect = parse("isIn(?x, ?b) and not isIn(?x, ?a)");
  d.attributes.operation_range.places = std::move(range);
  d.attributes.cost = cost;
  d.attributes.avg_realization_time = time;
  d.active_marker = std::move(marker);
  return d;
}

inline Provider robot(std::string id, std::vector<ServiceDescription> offered, std::size_t capacity = 1) {
  Provider p;
  p.id = std::move(id);
  p.kind = ProviderKind::Device;
  p.world_object = "robot1";
  p.offered = std::move(offered);
  p.behavior.capacity = capacity;
  return p;
}

inline Task move_task(const std::string& box, const std::string& from, const std::string& to) {
  return Task{parse("isIn(" + box + ", " + from + ")"), parse("isIn(" + box + ", " + to + ")")};
}

}  // namespace hrc::testing
