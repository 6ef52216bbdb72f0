#include "hrc/registry.hpp"

#include <algorithm>
#include <tuple>

#include "hrc/error.hpp"

namespace hrc {

bool RegistryEntry::serves(const std::set<std::string>& region) const {
  if (!description.attributes.operation_range.covers(region)) return false;
  return !preferred || std::includes(preferred->begin(), preferred->end(), region.begin(), region.end());
}

bool entry_before(const RegistryEntry& a, const RegistryEntry& b) {
  const auto& x = a.description.attributes;
  const auto& y = b.description.attributes;
  return std::tie(x.cost, x.avg_realization_time, a.provider, a.description.type_name) <
         std::tie(y.cost, y.avg_realization_time, b.provider, b.description.type_name);
}

std::string Registry::register_service(RegistryEntry entry) {
  std::string id = entry.id();
  entries_[id] = std::move(entry);
  return id;
}

void Registry::unregister(const std::string& id) {
  if (!entries_.erase(id)) throw Error(Errc::UnknownId, "no registry entry " + id);
}

void Registry::unregister_provider(const std::string& provider) {
  std::erase_if(entries_, [&](const auto& kv) { return kv.second.provider == provider; });
}

std::vector<std::string> Registry::publish(const Ontology& ontology, const WorldMap& map, const Provider& provider,
                                           std::int64_t now) {
  validate_provider(ontology, map, provider);
  std::vector<std::string> ids;
  for (const auto& d : provider.offered) {
    RegistryEntry e{provider.id, provider.kind, d, now, std::nullopt};
    if (provider.kind == ProviderKind::Human) e.preferred = preferred_places(map, provider.world_object);
    auto it = entries_.find(e.id());
    if (it != entries_.end() && it->second.description == d && it->second.provider_kind == e.provider_kind &&
        it->second.preferred == e.preferred) {
      ids.push_back(it->first);  // unchanged: keep the original publication time
      continue;
    }
    ids.push_back(register_service(std::move(e)));
  }
  return ids;
}

std::vector<Discovery> Registry::discover(const Formula& goal, const DiscoveryFilter& filter) const {
  const auto goal_atoms = conjuncts(goal);
  std::vector<Discovery> out;
  for (const auto& [id, e] : entries_) {
    const auto& attrs = e.description.attributes;
    if (filter.max_cost && attrs.cost > *filter.max_cost) continue;
    if (filter.region && !e.serves(*filter.region)) continue;
    if (filter.excluded_providers.count(e.provider)) continue;
    if (!filter.service_type.empty() && filter.service_type != e.description.type_name) continue;
    std::set<Binding> found;
    const Formula& eff = e.description.effect;
    std::vector<Formula> alts = eff.kind == Formula::Kind::Or ? eff.children : std::vector<Formula>{eff};
    for (const auto& alt : alts) {
      if (!alt.is_conjunctive()) continue;
      for (const auto& pattern : conjuncts(alt)) {
        for (const auto& target : goal_atoms) {
          Binding b;
          if (match_atom(pattern, target, b)) found.insert(std::move(b));
        }
      }
    }
    for (const auto& b : found) out.push_back(Discovery{e, b});
  }
  std::stable_sort(out.begin(), out.end(), [](const Discovery& a, const Discovery& b) {
    if (entry_before(a.entry, b.entry)) return true;
    if (entry_before(b.entry, a.entry)) return false;
    return a.binding < b.binding;
  });
  return out;
}

std::vector<RegistryEntry> Registry::entries() const {
  std::vector<RegistryEntry> out;
  for (const auto& [id, e] : entries_) out.push_back(e);
  std::sort(out.begin(), out.end(), entry_before);
  return out;
}

const RegistryEntry* Registry::find(const std::string& id) const {
  auto it = entries_.find(id);
  return it == entries_.end() ? nullptr : &it->second;
}

}  // namespace hrc
