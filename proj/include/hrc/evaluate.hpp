#pragma once

#include <string>
#include <vector>

#include "hrc/formula.hpp"
#include "hrc/world_map.hpp"

namespace hrc {

// Relations decided by comparison of attribute values rather than by
// tuple membership: lt, le, gt, ge, eq, neq (all binary).
bool is_computed_relation(const std::string& name);
const std::vector<std::string>& computed_relation_names();

// Closed-world truth of `f` in `map` under `binding`.
// Throws UnboundVariable or UnknownObject.
bool evaluate(const Formula& f, const WorldMap& map, const Binding& binding = {});
bool evaluate(const Atom& atom, const WorldMap& map, const Binding& binding = {});

// All bindings of the free variables of `f` to objects of `map` under which
// `f` holds, ordered by variable name then object id.
std::vector<Binding> satisfying_bindings(const Formula& f, const WorldMap& map);

// Same, but variables already fixed by `partial` are kept as given.
std::vector<Binding> satisfying_bindings(const Formula& f, const WorldMap& map,
                                         const Binding& partial);

// Makes a ground effect atom true in `map`: positive extensional atoms are
// asserted, negated ones retracted, eq(attr(o, "a"), v) assigns the
// attribute. Returns whether the map changed. Other computed atoms throw
// MalformedFormula.
bool apply_effect_atom(WorldMap& map, const Atom& atom);

// Propositional entailment over the atoms mentioned in phi and psi.
// Both formulas must be ground and mention only objects in `domain`.
// Throws DomainTooLarge for more than 20 distinct atoms.
bool entails(const Formula& phi, const Formula& psi, const std::vector<std::string>& domain);

}  // namespace hrc
