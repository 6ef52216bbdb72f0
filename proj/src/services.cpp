#include "hrc/services.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hrc/error.hpp"
#include "hrc/evaluate.hpp"

namespace hrc {

const char* kind_name(ServiceKind k) {
  switch (k) {
    case ServiceKind::Physical:
      return "physical";
    case ServiceKind::Cognitive:
      return "cognitive";
    case ServiceKind::Software:
      return "software";
  }
  return "?";
}

const char* kind_name(ProviderKind k) { return k == ProviderKind::Human ? "human" : "device"; }

const char* reason_name(RefusalReason r) {
  switch (r) {
    case RefusalReason::NoMatchingService:
      return "NoMatchingService";
    case RefusalReason::OutOfRange:
      return "OutOfRange";
    case RefusalReason::Busy:
      return "Busy";
    case RefusalReason::Expired:
      return "Expired";
  }
  return "?";
}

bool OperationRange::covers(const std::set<std::string>& region) const {
  if (!places) return true;
  return std::includes(places->begin(), places->end(), region.begin(), region.end());
}

bool OperationRange::intersects(const std::set<std::string>& region) const {
  if (!places) return true;
  return std::any_of(region.begin(), region.end(), [&](const std::string& p) { return places->count(p) != 0; });
}

const ServiceDescription* Provider::find(const std::string& type_name) const {
  for (const auto& d : offered) {
    if (d.type_name == type_name) return &d;
  }
  return nullptr;
}

std::int64_t Provider::duration(const ServiceDescription& d) const {
  auto it = behavior.durations.find(d.type_name);
  return std::max<std::int64_t>(1, it != behavior.durations.end() ? it->second : d.attributes.avg_realization_time);
}

std::set<std::string> region_of(const Ontology& ontology, const Task& task) {
  auto atoms = all_atoms(task.precondition);
  for (auto& a : all_atoms(task.effect)) atoms.push_back(std::move(a));
  return locations_of(ontology, atoms);
}

std::optional<std::set<std::string>> preferred_places(const WorldMap& map, const std::string& object_id) {
  auto v = map.attribute(object_id, "PreferredEnvironment");
  if (!v || !std::holds_alternative<std::string>(*v)) return std::nullopt;
  std::istringstream in(std::get<std::string>(*v));
  std::set<std::string> out;
  for (std::string w; in >> w;) out.insert(w);
  return out;
}

void validate_description(const Ontology& ontology, const ServiceDescription& d) {
  auto bad = [&](const std::string& why) { throw Error(Errc::InvalidDescription, d.type_name + ": " + why); };
  if (d.type_name.empty()) bad("empty type name");
  try {
    validate_formula(ontology, d.precondition);
    validate_formula(ontology, d.effect);
  } catch (const Error& e) {
    bad(e.what());
  }
  if (!d.effect.is_conjunctive()) {
    throw Error(Errc::DisjunctiveEffect, d.type_name + ": effect is not a conjunction of literals");
  }
  if (d.kind == ServiceKind::Physical && d.effect.is_true()) bad("physical service with trivial effect");
  if (d.kind != ServiceKind::Physical && !d.effect.is_true()) bad("non-physical service changes the world");
  std::set<std::string> allowed = free_variables(d.precondition);
  for (const auto& p : d.inputs) allowed.insert(p.name);
  for (const auto& v : free_variables(d.effect)) {
    if (!allowed.count(v)) bad("effect variable ?" + v + " not bound by precondition or inputs");
  }
  if (!(d.attributes.cost >= 0) || !std::isfinite(d.attributes.cost)) bad("negative cost");
  if (d.attributes.avg_realization_time < 0) bad("negative realization time");
  if (!d.active_marker.empty() && d.kind != ServiceKind::Physical) bad("only physical services mark their region");
  if (!d.active_marker.empty()) {
    const RelationDef* rel = ontology.relation(d.active_marker);
    if (!rel || rel->arity != 1 || rel->semantics != RelationSemantics::Extensional) {
      bad("active marker must be a unary extensional relation");
    }
  }
}

void validate_provider(const Ontology& ontology, const WorldMap& map, const Provider& p) {
  std::set<std::string> seen;
  for (const auto& d : p.offered) {
    validate_description(ontology, d);
    if (!seen.insert(d.type_name).second) {
      throw Error(Errc::InvalidDescription, p.id + " offers " + d.type_name + " twice");
    }
    if (!d.attributes.operation_range.bounded()) continue;
    auto pos = map.attribute(p.world_object, "position");
    if (pos && std::holds_alternative<std::string>(*pos) &&
        !d.attributes.operation_range.places->count(std::get<std::string>(*pos))) {
      throw Error(Errc::InvalidDescription,
                  p.id + ": position " + std::get<std::string>(*pos) + " outside range of " + d.type_name);
    }
  }
}

namespace {

std::vector<Atom> unique_conjuncts(const Formula& f) {
  auto atoms = conjuncts(f);
  std::sort(atoms.begin(), atoms.end());
  atoms.erase(std::unique(atoms.begin(), atoms.end()), atoms.end());
  return atoms;
}

// Each target atom matched by a distinct pattern atom; equal counts.
bool cover(const std::vector<Atom>& patterns, const std::vector<Atom>& targets, std::size_t i,
           std::vector<bool>& used, Binding& b) {
  if (i == targets.size()) return true;
  for (std::size_t k = 0; k < patterns.size(); ++k) {
    if (used[k]) continue;
    Binding trial = b;
    if (!match_atom(patterns[k], targets[i], trial)) continue;
    used[k] = true;
    if (cover(patterns, targets, i + 1, used, trial)) {
      b = std::move(trial);
      return true;
    }
    used[k] = false;
  }
  return false;
}

bool cover_all(const Formula& pattern, const Formula& target, Binding& b) {
  if (!pattern.is_conjunctive() || !target.is_conjunctive()) return false;
  const auto pats = unique_conjuncts(pattern);
  const auto tgts = unique_conjuncts(target);
  if (pats.size() != tgts.size()) return false;
  std::vector<bool> used(pats.size(), false);
  return cover(pats, tgts, 0, used, b);
}

std::vector<Formula> alternatives(const Formula& effect) {
  if (effect.kind == Formula::Kind::Or) return effect.children;
  return {effect};
}

}  // namespace

std::optional<Binding> match_description(const ServiceDescription& d, const Task& task) {
  for (const auto& alt : alternatives(d.effect)) {
    Binding b;
    if (!cover_all(alt, task.effect, b)) continue;
    if (!task.precondition.is_true() && d.precondition.is_conjunctive()) {
      // A task with precondition true leaves it to the provider.
      if (!cover_all(d.precondition, task.precondition, b)) continue;
    }
    return b;
  }
  return std::nullopt;
}

namespace {

int refusal_rank(RefusalReason r) {
  switch (r) {
    case RefusalReason::NoMatchingService:
      return 0;
    case RefusalReason::OutOfRange:
      return 1;
    case RefusalReason::Busy:
      return 2;
    case RefusalReason::Expired:
      return 3;
  }
  return 0;
}

// Completes `b` so that the description's precondition holds in `map`.
std::optional<Binding> ground_against(const ServiceDescription& d, const Task& task, Binding b,
                                      const WorldMap& map) {
  const Formula pre = substitute(d.precondition, b);
  const Formula eff = substitute(task.effect, b);
  if (free_variables(pre).empty() && free_variables(eff).empty()) return b;
  const auto options = satisfying_bindings(pre, map);
  for (const auto& extra : options) {
    Binding full = b;
    for (const auto& [k, v] : extra) full.emplace(k, v);
    if (free_variables(substitute(eff, full)).empty()) return full;
  }
  return std::nullopt;
}

}  // namespace

IntentionReply handle_intention(const Ontology& ontology, const Provider& provider, const Intention& intention,
                                const WorldMap& map, std::int64_t now, std::size_t active_executions) {
  if (intention.deadline && *intention.deadline < now) {
    return Refusal{RefusalReason::Expired, "deadline " + std::to_string(*intention.deadline) + " passed"};
  }
  Refusal best{RefusalReason::NoMatchingService, "no offered service matches " + to_string(intention.task.effect)};
  auto note = [&](RefusalReason r, std::string why) {
    if (refusal_rank(r) > refusal_rank(best.reason)) best = Refusal{r, std::move(why)};
  };
  for (const auto& d : provider.offered) {
    if (!intention.service_type.empty() && d.type_name != intention.service_type) continue;
    auto matched = match_description(d, intention.task);
    if (!matched) continue;
    auto full = ground_against(d, intention.task, *matched, map);
    if (!full) continue;
    Task ground{substitute(d.precondition, *full), substitute(intention.task.effect, *full)};
    const auto region = region_of(ontology, ground);
    if (!d.attributes.operation_range.covers(region)) {
      note(RefusalReason::OutOfRange, d.type_name + " does not reach the task region");
      continue;
    }
    if (provider.kind == ProviderKind::Human) {
      auto pref = preferred_places(map, provider.world_object);
      if (pref && !std::includes(pref->begin(), pref->end(), region.begin(), region.end())) {
        note(RefusalReason::OutOfRange, "region outside preferred environment");
        continue;
      }
    }
    if (active_executions >= provider.behavior.capacity) {
      note(RefusalReason::Busy, "capacity " + std::to_string(provider.behavior.capacity) + " in use");
      continue;
    }
    Commitment c;
    c.provider = provider.id;
    c.service_type = d.type_name;
    c.task = std::move(ground);
    c.cost = d.attributes.cost;
    c.duration = provider.duration(d);
    for (const auto& p : d.inputs) {
      auto it = full->find(p.name);
      if (it != full->end()) c.inputs.emplace(p.name, it->second);
    }
    c.expiry = intention.deadline.value_or(now + 100);
    c.region = region;
    return c;
  }
  return best;
}

std::vector<CriticalSituationNotice> monitor_local(const Ontology& ontology, const Provider& provider,
                                                   const SafeguardStore& store, const WorldMap& map) {
  std::vector<CriticalSituationNotice> out;
  for (const auto& sg : store.safeguards()) {
    for (const auto& b : satisfying_bindings(sg.critical, map)) {
      const auto location = locations_of(ontology, all_atoms(substitute(sg.critical, b)));
      if (!sg.scope.empty() &&
          std::none_of(location.begin(), location.end(), [&](const auto& p) { return sg.scope.count(p) != 0; })) {
        continue;
      }
      const bool watched = std::any_of(provider.offered.begin(), provider.offered.end(), [&](const auto& d) {
        return d.attributes.operation_range.intersects(location) || location.empty();
      });
      if (!watched) continue;
      CriticalSituationNotice n;
      n.provider = provider.id;
      n.safeguard_id = sg.id;
      n.binding = b;
      n.location = location;
      for (std::size_t i = 0; i < sg.safe_alternatives.size() && !n.self_resolving; ++i) {
        const Task wanted = sg.task(i, b);
        if (!free_variables(wanted.effect).empty() || !wanted.effect.is_conjunctive()) continue;
        for (const auto& d : provider.offered) {
          if (d.kind != ServiceKind::Physical) continue;
          auto matched = match_description(d, Task{Formula::truth(), wanted.effect});
          if (!matched) continue;
          auto full = ground_against(d, Task{Formula::truth(), wanted.effect}, *matched, map);
          if (!full) continue;
          Task ground{substitute(d.precondition, *full), wanted.effect};
          if (!evaluate(ground.precondition, map)) continue;
          if (!d.attributes.operation_range.covers(region_of(ontology, ground))) continue;
          n.self_resolving = true;
          n.local_action = std::move(ground);
          n.local_service = d.type_name;
          n.alternative = i + 1;
          break;
        }
      }
      out.push_back(std::move(n));
    }
  }
  return out;
}

SituationReport observe(const Ontology& ontology, const WorldMap& map, const std::set<std::string>& region,
                        const std::vector<Atom>& probes, std::int64_t now, const std::string& observer) {
  SituationReport r;
  r.at = now;
  r.observer = observer;
  std::set<Atom> seen;
  for (const auto& t : map.tuples()) {
    const auto locs = locations_of(ontology, {t});
    if (std::any_of(locs.begin(), locs.end(), [&](const auto& p) { return region.count(p) != 0; })) {
      r.observed.emplace_back(t, true);
      seen.insert(t);
    }
  }
  for (const auto& p : probes) {
    const Atom pos = p.positive();
    if (!pos.is_ground() || is_computed_relation(pos.relation) || seen.count(pos)) continue;
    r.observed.emplace_back(pos, map.holds(pos));
    seen.insert(pos);
  }
  return r;
}

void apply_diff(WorldMap& map, const AtomDiff& diff) {
  for (const auto& c : diff) {
    if (is_computed_relation(c.atom.relation)) {
      if (c.now_true) apply_effect_atom(map, c.atom);
      continue;
    }
    for (const auto& t : c.atom.args) {
      if (t.kind == Term::Kind::Object && !map.has_object(t.name)) throw Error(Errc::UnknownObject, t.name);
    }
    if (c.now_true) {
      map.assert_atom(c.atom);
    } else {
      map.retract_atom(c.atom);
    }
  }
}

AtomDiff apply_atoms(WorldMap& map, const std::vector<Atom>& atoms) {
  AtomDiff out;
  for (const auto& a : atoms) {
    if (!apply_effect_atom(map, a)) continue;
    if (is_computed_relation(a.relation)) {
      out.push_back({a, true});
    } else {
      out.push_back({a.positive(), !a.negated});
    }
  }
  return out;
}

AtomDiff MapEnvironment::apply(const std::vector<Atom>& atoms, const std::string&) { return apply_atoms(map_, atoms); }

std::string to_string(const AtomDiff& diff) {
  std::string out;
  for (const auto& c : diff) {
    if (!out.empty()) out += ", ";
    out += (c.now_true ? "+" : "-") + to_string(c.atom);
  }
  return out;
}

std::vector<Atom> effect_atoms(const Formula& effect) {
  auto atoms = conjuncts(effect);
  std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) {
    if (a.negated != b.negated) return !a.negated;
    return a < b;
  });
  atoms.erase(std::unique(atoms.begin(), atoms.end()), atoms.end());
  return atoms;
}

// --- Execution -------------------------------------------------------------

Execution::Execution(Commitment c, ServiceKind kind, std::string active_marker, std::vector<Atom> probes)
    : commitment_(std::move(c)), kind_(kind), marker_(std::move(active_marker)), probes_(std::move(probes)) {}

void Execution::arm(FailureMode mode, std::int64_t after_ticks) {
  failure_ = mode;
  fail_after_ = std::max<std::int64_t>(0, after_ticks);
}

std::vector<Atom> Execution::marker_atoms() const {
  std::vector<Atom> out;
  if (marker_.empty()) return out;
  for (const auto& place : commitment_.region) {
    Atom a;
    a.relation = marker_;
    a.args = {Term::object(place)};
    out.push_back(std::move(a));
  }
  return out;
}

void Execution::record(const AtomDiff& d) {
  for (const auto& c : d) {
    changes_.push_back(c);
    auto it = net_.find(c.atom);
    if (it == net_.end()) {
      net_.emplace(c.atom, std::make_pair(!c.now_true, c.now_true));
    } else {
      it->second.second = c.now_true;
    }
  }
}

AtomDiff Execution::net_changes() const {
  AtomDiff out;
  for (const auto& [atom, truth] : net_) {
    if (truth.first != truth.second) out.push_back({atom, truth.second});
  }
  return out;
}

AtomDiff Execution::drop_marker(Environment& env) {
  auto atoms = marker_atoms();
  for (auto& a : atoms) a.negated = true;
  auto d = env.apply(atoms, commitment_.provider);
  record(d);
  return d;
}

ExecutionEvent Execution::fail(Environment& env) {
  finished_ = true;
  using K = FailureMode::Kind;
  switch (failure_->kind) {
    case K::SilentFailure:
      drop_marker(env);
      silent_ = true;
      return ExecSilent{};
    case K::PartialEffect: {
      std::vector<Atom> positives;
      for (const auto& a : effect_atoms(commitment_.task.effect)) {
        if (!a.negated && !is_computed_relation(a.relation)) positives.push_back(a);
      }
      const auto k = static_cast<std::size_t>(std::floor(failure_->fraction * static_cast<double>(positives.size())));
      positives.resize(std::min(k, positives.size()));
      record(env.apply(positives, commitment_.provider));
      drop_marker(env);
      if (failure_->silent_after) {
        silent_ = true;
        return ExecSilent{};
      }
      break;
    }
    case K::FaultWithDescription:
      drop_marker(env);
      break;
  }
  ExecFault f;
  f.description = "fault during " + commitment_.service_type;
  f.diff = net_changes();
  for (const auto& a : effect_atoms(commitment_.task.effect)) {
    if (is_computed_relation(a.relation)) continue;
    f.observed.emplace_back(a.positive(), env.map().holds(a.positive()));
  }
  return f;
}

ExecutionEvent Execution::tick(Environment& env) {
  if (finished_) return silent_ ? ExecutionEvent{ExecSilent{}} : ExecutionEvent{ExecProgress{100}};
  if (!started_) {
    started_ = true;
    if (!evaluate(commitment_.task.precondition, env.map())) {
      finished_ = true;
      ExecFault f;
      f.description = "precondition of " + commitment_.service_type + " does not hold";
      for (const auto& a : all_atoms(commitment_.task.precondition)) {
        if (is_computed_relation(a.relation)) continue;
        f.observed.emplace_back(a.positive(), env.map().holds(a.positive()));
      }
      return f;
    }
    record(env.apply(marker_atoms(), commitment_.provider));
  }
  ++elapsed_;
  if (failure_ && elapsed_ > fail_after_) return fail(env);
  if (elapsed_ < commitment_.duration) {
    return ExecProgress{static_cast<int>(elapsed_ * 100 / commitment_.duration)};
  }
  finished_ = true;
  ExecCompleted done;
  if (kind_ == ServiceKind::Physical) {
    record(env.apply(effect_atoms(commitment_.task.effect), commitment_.provider));
  }
  drop_marker(env);
  if (kind_ == ServiceKind::Cognitive) {
    done.report = observe(env.ontology(), env.map(), commitment_.region, probes_, env.now(), commitment_.provider);
  }
  done.diff = net_changes();
  return done;
}

ExecCanceled Execution::cancel(Environment& env) {
  if (!finished_) drop_marker(env);
  finished_ = true;
  return ExecCanceled{net_changes()};
}

}  // namespace hrc
