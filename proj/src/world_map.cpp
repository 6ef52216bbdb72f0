#include "hrc/world_map.hpp"

#include "hrc/error.hpp"

namespace hrc {

const ObjectInstance& WorldMap::object(const std::string& id) const {
  auto it = objects_.find(id);
  if (it == objects_.end()) throw Error(Errc::UnknownObject, id);
  return it->second;
}

const ObjectInstance* WorldMap::find_object(const std::string& id) const {
  auto it = objects_.find(id);
  return it == objects_.end() ? nullptr : &it->second;
}

std::optional<Literal> WorldMap::attribute(const std::string& id, const std::string& name) const {
  const auto& obj = object(id);
  auto it = obj.attributes.find(name);
  if (it == obj.attributes.end()) return std::nullopt;
  return it->second.value;
}

bool WorldMap::holds(const Atom& tuple) const { return tuples_.count(tuple.positive()) != 0; }

void WorldMap::put_object(ObjectInstance object) {
  std::string id = object.id;
  objects_[id] = std::move(object);
  ++version_;
}

void WorldMap::set_attribute(const std::string& id, const std::string& name, AttributeValue value) {
  auto it = objects_.find(id);
  if (it == objects_.end()) throw Error(Errc::UnknownObject, id);
  it->second.attributes[name] = std::move(value);
  ++version_;
}

bool WorldMap::assert_atom(const Atom& tuple) {
  ++version_;
  return tuples_.insert(tuple.positive()).second;
}

bool WorldMap::retract_atom(const Atom& tuple) {
  ++version_;
  return tuples_.erase(tuple.positive()) != 0;
}

}  // namespace hrc
