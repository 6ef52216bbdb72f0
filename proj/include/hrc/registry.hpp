#pragma once

// Service registry: published descriptions and discovery by effect matching.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hrc/services.hpp"

namespace hrc {

struct RegistryEntry {
  std::string provider;
  ProviderKind provider_kind = ProviderKind::Device;
  ServiceDescription description;
  std::int64_t published_at = 0;
  // Human providers: the places they accept to work in.
  std::optional<std::set<std::string>> preferred;

  [[nodiscard]] std::string id() const { return provider + "/" + description.type_name; }
  // Range and preferred environment both cover the region.
  [[nodiscard]] bool serves(const std::set<std::string>& region) const;
};

struct DiscoveryFilter {
  std::optional<double> max_cost;
  std::optional<std::set<std::string>> region;  // range must cover it
  std::set<std::string> excluded_providers;
  std::string service_type;  // empty: any
};

struct Discovery {
  RegistryEntry entry;
  Binding binding;
};

class Registry {
 public:
  // Returns the entry id; re-registering the same (provider, type) replaces it.
  std::string register_service(RegistryEntry entry);
  // Throws UnknownId.
  void unregister(const std::string& id);
  void unregister_provider(const std::string& provider);

  // Validates and registers every offered description. Idempotent.
  std::vector<std::string> publish(const Ontology& ontology, const WorldMap& map, const Provider& provider,
                                   std::int64_t now);

  // Conjunctive goals only (DisjunctiveEffect otherwise).
  [[nodiscard]] std::vector<Discovery> discover(const Formula& goal, const DiscoveryFilter& filter = {}) const;

  // Ordered by (cost, time, provider id, type name).
  [[nodiscard]] std::vector<RegistryEntry> entries() const;
  [[nodiscard]] const RegistryEntry* find(const std::string& id) const;
  [[nodiscard]] std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, RegistryEntry> entries_;
};

// Total order used for discovery results and entry listings.
bool entry_before(const RegistryEntry& a, const RegistryEntry& b);

}  // namespace hrc
