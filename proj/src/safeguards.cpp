#include "hrc/safeguards.hpp"

#include <algorithm>

#include "hrc/error.hpp"
#include "hrc/evaluate.hpp"
#include "hrc/ontology.hpp"
#include "hrc/registry.hpp"

namespace hrc {

Task Safeguard::task(std::size_t alternative, const Binding& binding) const {
  return Task{substitute(critical, binding), substitute(safe_alternatives.at(alternative), binding)};
}

bool AchievabilityReport::any() const { return std::find(achievable.begin(), achievable.end(), true) != achievable.end(); }

AchievabilityReport SafeguardStore::add(const Ontology& ontology, Safeguard sg, const Registry& registry) {
  for (const auto& s : safeguards_) {
    if (s.id == sg.id) throw Error(Errc::DuplicateId, "safeguard " + sg.id);
  }
  if (sg.id.empty()) throw Error(Errc::MalformedFormula, "safeguard without id");
  if (sg.safe_alternatives.empty()) throw Error(Errc::MalformedFormula, sg.id + ": no safe alternatives");
  if (sg.critical.is_true()) throw Error(Errc::MalformedFormula, sg.id + ": critical formula is trivially true");
  validate_formula(ontology, sg.critical);
  const auto phi_vars = free_variables(sg.critical);
  AchievabilityReport report;
  for (const auto& psi : sg.safe_alternatives) {
    validate_formula(ontology, psi);
    for (const auto& v : free_variables(psi)) {
      if (!phi_vars.count(v)) throw Error(Errc::MalformedFormula, sg.id + ": ?" + v + " not bound by the critical formula");
    }
    bool found = false;
    const std::vector<Formula> parts = psi.kind == Formula::Kind::Or ? psi.children : std::vector<Formula>{psi};
    for (const auto& part : parts) {
      if (part.is_conjunctive() && !part.is_true() && !registry.discover(part).empty()) found = true;
    }
    report.achievable.push_back(found);
  }
  safeguards_.push_back(std::move(sg));
  return report;
}

const Safeguard& SafeguardStore::get(const std::string& id) const {
  for (const auto& s : safeguards_) {
    if (s.id == id) return s;
  }
  throw Error(Errc::UnknownId, "safeguard " + id);
}

std::vector<Binding> SafeguardStore::witnesses(const Ontology& ontology, const Safeguard& sg,
                                               const WorldMap& map) const {
  auto all = satisfying_bindings(sg.critical, map);
  if (sg.scope.empty()) return all;
  std::erase_if(all, [&](const Binding& b) {
    const auto locs = locations_of(ontology, all_atoms(substitute(sg.critical, b)));
    return std::none_of(locs.begin(), locs.end(), [&](const auto& p) { return sg.scope.count(p) != 0; });
  });
  return all;
}

std::vector<SafeguardActivation> SafeguardStore::check(const Ontology& ontology, const WorldMap& map,
                                                       std::int64_t now) {
  std::set<std::pair<std::string, Binding>> current;
  std::vector<SafeguardActivation> fresh;
  for (const auto& sg : safeguards_) {
    for (auto& b : witnesses(ontology, sg, map)) {
      auto key = std::make_pair(sg.id, b);
      current.insert(key);
      if (open_.count(key)) continue;
      SafeguardActivation a;
      a.id = next_id_++;
      a.safeguard_id = sg.id;
      a.binding = std::move(b);
      a.detected_at = now;
      open_.emplace(std::move(key), a.id);
      activations_.emplace(a.id, a);
      fresh.push_back(std::move(a));
    }
  }
  // Critical situations that went away by themselves.
  for (auto it = open_.begin(); it != open_.end();) {
    if (current.count(it->first)) {
      ++it;
      continue;
    }
    auto& a = activations_.at(it->second);
    if (a.status == SafeguardActivation::Status::Open) {
      a.status = SafeguardActivation::Status::Resolved;
      a.resolved_at = now;
    }
    it = open_.erase(it);
  }
  return fresh;
}

bool SafeguardStore::any_critical(const Ontology& ontology, const WorldMap& map) const {
  return std::any_of(safeguards_.begin(), safeguards_.end(),
                     [&](const Safeguard& sg) { return !witnesses(ontology, sg, map).empty(); });
}

SafeguardActivation& SafeguardStore::activation(std::uint64_t id) {
  auto it = activations_.find(id);
  if (it == activations_.end()) throw Error(Errc::UnknownId, "activation " + std::to_string(id));
  return it->second;
}

void SafeguardStore::record_resolution(std::uint64_t id, SafeguardActivation::Status status, std::size_t alternative,
                                       std::int64_t now) {
  auto& a = activation(id);
  a.status = status;
  a.alternative = alternative;
  a.resolved_at = std::max(now, a.detected_at);
  // Stays in open_ until the critical formula stops holding, so a still-true
  // situation is not reported twice.
}

AchievabilityReport add_safeguard(SafeguardStore& store, const Ontology& ontology, Safeguard sg,
                                  const Registry& registry) {
  return store.add(ontology, std::move(sg), registry);
}

std::vector<SafeguardActivation> check(SafeguardStore& store, const Ontology& ontology, const WorldMap& map,
                                       std::int64_t now) {
  return store.check(ontology, map, now);
}

}  // namespace hrc
