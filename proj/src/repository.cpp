#include "hrc/repository.hpp"

#include <algorithm>

#include "hrc/evaluate.hpp"

namespace hrc {

void Repository::touch(const Ontology& ontology, const Atom& a, std::int64_t now) {
  for (const auto& p : locations_of(ontology, {a})) last_update_[p] = now;
}

void Repository::apply(const Ontology& ontology, const AtomDiff& diff, std::int64_t now) {
  apply_diff(map_, diff);
  for (const auto& c : diff) touch(ontology, c.atom, now);
}

void Repository::observe(const Ontology& ontology, const std::vector<std::pair<Atom, bool>>& observed,
                         std::int64_t now) {
  for (const auto& [atom, truth] : observed) {
    if (is_computed_relation(atom.relation)) continue;
    if (truth) {
      map_.assert_atom(atom.positive());
    } else {
      map_.retract_atom(atom.positive());
    }
    touch(ontology, atom, now);
  }
}

void Repository::merge_region(const Ontology& ontology, const SituationReport& report,
                              const std::set<std::string>& region) {
  std::set<Atom> reported_true;
  for (const auto& [a, t] : report.observed) {
    if (t) reported_true.insert(a);
  }
  std::vector<Atom> drop;
  for (const auto& t : map_.tuples()) {
    const auto locs = locations_of(ontology, {t});
    const bool inside = std::any_of(locs.begin(), locs.end(), [&](const auto& p) { return region.count(p) != 0; });
    if (inside && !reported_true.count(t)) drop.push_back(t);
  }
  for (const auto& t : drop) map_.retract_atom(t);
  observe(ontology, report.observed, report.at);
  for (const auto& p : region) last_update_[p] = report.at;
}

}  // namespace hrc
