#pragma once

// Safeguards: critical formula -> ordered safe alternatives.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hrc/formula.hpp"
#include "hrc/world_map.hpp"

namespace hrc {

class Ontology;
class Registry;

struct Safeguard {
  std::string id;
  Formula critical;
  std::vector<Formula> safe_alternatives;
  // Places the safeguard applies to; empty means everywhere.
  std::set<std::string> scope;

  // The ground task (critical -> i-th safe formula) under `binding`.
  [[nodiscard]] Task task(std::size_t alternative, const Binding& binding) const;
};

struct SafeguardActivation {
  std::uint64_t id = 0;
  std::string safeguard_id;
  Binding binding;
  std::int64_t detected_at = 0;
  enum class Status { Open, Resolved, Unresolvable };
  Status status = Status::Open;
  std::size_t alternative = 0;  // 1-based index of the alternative that succeeded
  std::int64_t resolved_at = -1;
};

struct AchievabilityReport {
  // One flag per safe alternative: some published service matches it.
  std::vector<bool> achievable;

  [[nodiscard]] bool any() const;
};

class SafeguardStore {
 public:
  // Throws DuplicateId or MalformedFormula.
  AchievabilityReport add(const Ontology& ontology, Safeguard sg, const Registry& registry);

  [[nodiscard]] const std::vector<Safeguard>& safeguards() const { return safeguards_; }
  [[nodiscard]] const Safeguard& get(const std::string& id) const;
  [[nodiscard]] bool empty() const { return safeguards_.empty(); }

  // New activations for every (safeguard, binding) whose critical formula
  // holds in `map` and which is not already open. Activations whose
  // critical formula no longer holds are closed.
  std::vector<SafeguardActivation> check(const Ontology& ontology, const WorldMap& map, std::int64_t now);

  // Whether any critical formula holds in `map` (under some binding).
  [[nodiscard]] bool any_critical(const Ontology& ontology, const WorldMap& map) const;

  [[nodiscard]] const std::map<std::uint64_t, SafeguardActivation>& activations() const { return activations_; }
  SafeguardActivation& activation(std::uint64_t id);
  void record_resolution(std::uint64_t id, SafeguardActivation::Status status, std::size_t alternative,
                         std::int64_t now);

 private:
  [[nodiscard]] std::vector<Binding> witnesses(const Ontology& ontology, const Safeguard& sg,
                                               const WorldMap& map) const;

  std::vector<Safeguard> safeguards_;
  std::map<std::uint64_t, SafeguardActivation> activations_;
  // (safeguard id, binding) -> activation id, while the critical formula holds
  std::map<std::pair<std::string, Binding>, std::uint64_t> open_;
  std::uint64_t next_id_ = 1;
};

// Free-function form of the store operations.
AchievabilityReport add_safeguard(SafeguardStore& store, const Ontology& ontology, Safeguard sg,
                                  const Registry& registry);
std::vector<SafeguardActivation> check(SafeguardStore& store, const Ontology& ontology, const WorldMap& map,
                                       std::int64_t now);

}  // namespace hrc
