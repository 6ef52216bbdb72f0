#pragma once

// The Task Manager's view of the world: a possibly stale copy of the map.

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "hrc/ontology.hpp"
#include "hrc/services.hpp"
#include "hrc/world_map.hpp"

namespace hrc {

class Repository {
 public:
  Repository() = default;
  explicit Repository(WorldMap initial) : map_(std::move(initial)) {}

  [[nodiscard]] const WorldMap& map() const { return map_; }
  [[nodiscard]] const std::map<std::string, std::int64_t>& last_update() const { return last_update_; }

  // Effect record reported by a provider.
  void apply(const Ontology& ontology, const AtomDiff& diff, std::int64_t now);
  // Individual observations; only the listed atoms change.
  void observe(const Ontology& ontology, const std::vector<std::pair<Atom, bool>>& observed, std::int64_t now);
  // A report complete for `region`: located tuples there that the report
  // does not list as true are dropped.
  void merge_region(const Ontology& ontology, const SituationReport& report, const std::set<std::string>& region);

 private:
  void touch(const Ontology& ontology, const Atom& a, std::int64_t now);

  WorldMap map_;
  std::map<std::string, std::int64_t> last_update_;  // place -> tick
};

}  // namespace hrc
