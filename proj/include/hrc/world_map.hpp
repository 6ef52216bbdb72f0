#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hrc/formula.hpp"

namespace hrc {

struct AttributeValue {
  Literal value{0.0};
  std::string unit;  // empty: the unit declared by the attribute

  bool operator==(const AttributeValue& other) const = default;
};

struct ObjectInstance {
  std::string id;
  std::string type;
  std::map<std::string, AttributeValue> attributes;
  // role -> object ids filling that role
  std::map<std::string, std::vector<std::string>> subobjects;

  bool operator==(const ObjectInstance& other) const = default;
};

// A concrete environment: objects plus the true extensional tuples
// (closed world). Tuples are stored as positive ground atoms.
class WorldMap {
 public:
  [[nodiscard]] const std::map<std::string, ObjectInstance>& objects() const { return objects_; }
  [[nodiscard]] const std::set<Atom>& tuples() const { return tuples_; }
  [[nodiscard]] std::uint64_t version() const { return version_; }

  [[nodiscard]] bool has_object(const std::string& id) const { return objects_.count(id) != 0; }
  [[nodiscard]] const ObjectInstance& object(const std::string& id) const;
  [[nodiscard]] const ObjectInstance* find_object(const std::string& id) const;
  [[nodiscard]] std::optional<Literal> attribute(const std::string& id, const std::string& name) const;

  [[nodiscard]] bool holds(const Atom& tuple) const;

  void put_object(ObjectInstance object);
  void set_attribute(const std::string& id, const std::string& name, AttributeValue value);
  // Both return true when the tuple set changed; the version is bumped either way.
  bool assert_atom(const Atom& tuple);
  bool retract_atom(const Atom& tuple);

  // Equality on content; the version counter is bookkeeping.
  [[nodiscard]] bool same_content(const WorldMap& other) const {
    return objects_ == other.objects_ && tuples_ == other.tuples_;
  }

 private:
  std::map<std::string, ObjectInstance> objects_;
  std::set<Atom> tuples_;
  std::uint64_t version_ = 0;
};

}  // namespace hrc
