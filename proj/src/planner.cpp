#include "hrc/planner.hpp"

#include <algorithm>
#include <deque>

#include "hrc/error.hpp"
#include "hrc/evaluate.hpp"

namespace hrc {

const PlanStep& AbstractPlan::step(std::size_t id) const {
  for (const auto& s : steps) {
    if (s.id == id) return s;
  }
  throw Error(Errc::UnknownId, "plan step " + std::to_string(id));
}

std::vector<std::size_t> AbstractPlan::predecessors(std::size_t id) const {
  std::vector<std::size_t> out;
  for (const auto& [a, b] : order) {
    if (b == id) out.push_back(a);
  }
  return out;
}

std::vector<std::size_t> AbstractPlan::topological() const {
  std::map<std::size_t, std::size_t> indegree;
  for (const auto& s : steps) indegree[s.id] = 0;
  for (const auto& [a, b] : order) ++indegree[b];
  std::set<std::size_t> ready;
  for (const auto& [id, n] : indegree) {
    if (n == 0) ready.insert(id);
  }
  std::vector<std::size_t> out;
  while (!ready.empty()) {
    const std::size_t id = *ready.begin();
    ready.erase(ready.begin());
    out.push_back(id);
    for (const auto& [a, b] : order) {
      if (a == id && --indegree[b] == 0) ready.insert(b);
    }
  }
  if (out.size() != steps.size()) throw Error(Errc::MalformedFormula, "plan order has a cycle");
  return out;
}

WorldMap project_state(WorldMap state, const Formula& effect) {
  for (const auto& a : conjuncts(effect)) apply_effect_atom(state, a);
  return state;
}

AtomDiff projected_delta(const WorldMap& state, const Formula& effect) {
  AtomDiff out;
  for (const auto& a : conjuncts(effect)) {
    if (is_computed_relation(a.relation)) {
      WorldMap probe = state;
      if (apply_effect_atom(probe, a)) out.push_back({a, true});
      continue;
    }
    const bool held = state.holds(a.positive());
    if (a.negated == held) out.push_back({a.positive(), !a.negated});
  }
  std::sort(out.begin(), out.end(), [](const AtomChange& x, const AtomChange& y) { return x.atom < y.atom; });
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::optional<Task> inverse_task(const Ontology& ontology, const AtomDiff& diff, const WorldMap& before) {
  std::vector<Atom> undo;
  for (const auto& c : diff) {
    if (is_computed_relation(c.atom.relation)) {
      const auto& fn = c.atom.args.at(0);
      const auto old = before.attribute(fn.args.at(0).name, std::get<std::string>(fn.args.at(1).value));
      if (!old) return std::nullopt;
      Atom a = c.atom;
      a.args[1] = Term::literal(*old);
      undo.push_back(std::move(a));
      continue;
    }
    const RelationDef* rel = ontology.relation(c.atom.relation);
    if (!rel || !rel->invertible) return std::nullopt;
    Atom a = c.atom;
    a.negated = c.now_true;
    undo.push_back(std::move(a));
  }
  return Task{Formula::truth(), undo.empty() ? Formula::truth() : conjoin(undo)};
}

namespace {

// Keys used to detect interference between steps.
void attribute_keys(const Term& t, std::set<std::string>& out) {
  if (t.kind == Term::Kind::Function && t.name == "attr" && t.args.size() == 2) {
    out.insert("attr " + to_string(t.args[0]) + " " + to_string(t.args[1]));
  }
  for (const auto& a : t.args) attribute_keys(a, out);
}

std::set<std::string> reads_of(const PlanStep& s) {
  std::set<std::string> out;
  for (const auto& a : all_atoms(s.task.precondition)) {
    if (is_computed_relation(a.relation)) {
      for (const auto& t : a.args) attribute_keys(t, out);
    } else {
      out.insert(to_string(a.positive()));
    }
  }
  return out;
}

std::set<std::string> writes_of(const PlanStep& s) {
  std::set<std::string> out;
  for (const auto& a : conjuncts(s.task.effect)) {
    if (is_computed_relation(a.relation)) {
      attribute_keys(a.args.at(0), out);
    } else {
      out.insert(to_string(a.positive()));
    }
  }
  return out;
}

bool overlap(const std::set<std::string>& a, const std::set<std::string>& b) {
  return std::any_of(a.begin(), a.end(), [&](const std::string& x) { return b.count(x) != 0; });
}

}  // namespace

AbstractPlan build_partial_order(std::vector<PlanStep> steps, const WorldMap& initial) {
  AbstractPlan p;
  for (std::size_t i = 0; i < steps.size(); ++i) steps[i].id = i + 1;
  std::vector<std::set<std::string>> reads, writes;
  for (const auto& s : steps) {
    reads.push_back(reads_of(s));
    writes.push_back(writes_of(s));
  }
  for (std::size_t j = 0; j < steps.size(); ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      if (overlap(writes[i], reads[j]) || overlap(writes[i], writes[j]) || overlap(writes[j], reads[i])) {
        p.order.emplace(i + 1, j + 1);
      }
    }
    for (const auto& a : all_atoms(steps[j].task.precondition)) {
      if (a.negated || is_computed_relation(a.relation)) continue;
      std::size_t producer = 0;
      for (std::size_t i = j; i-- > 0;) {
        const auto eff = conjuncts(steps[i].task.effect);
        if (std::find(eff.begin(), eff.end(), a) != eff.end()) {
          producer = i + 1;
          break;
        }
      }
      if (producer == 0 && !initial.holds(a)) continue;
      p.causal_links.insert(CausalLink{producer, a, j + 1});
      if (producer != 0) p.order.emplace(producer, j + 1);
    }
  }
  p.steps = std::move(steps);
  return p;
}

namespace {

struct Schema {
  std::string type;
  Formula precondition;
  Formula effect;
  std::string marker;
  std::vector<RegistryEntry> entries;
};

std::vector<Schema> schemas_of(const Registry& registry, const std::set<std::string>& excluded) {
  std::vector<Schema> out;
  std::map<std::string, std::size_t> index;
  for (const auto& e : registry.entries()) {
    const auto& d = e.description;
    if (excluded.count(e.provider) || d.kind != ServiceKind::Physical) continue;
    const std::vector<Formula> alts = d.effect.kind == Formula::Kind::Or ? d.effect.children : std::vector<Formula>{d.effect};
    for (const auto& alt : alts) {
      if (!alt.is_conjunctive()) continue;
      const std::string key = d.type_name + "|" + to_string(d.precondition) + "|" + to_string(alt) + "|" + d.active_marker;
      auto it = index.find(key);
      if (it == index.end()) {
        index.emplace(key, out.size());
        out.push_back(Schema{d.type_name, d.precondition, alt, d.active_marker, {e}});
      } else {
        out[it->second].entries.push_back(e);
      }
    }
  }
  return out;
}

using AttrOverrides = std::map<std::pair<std::string, std::string>, Literal>;

struct StateKey {
  std::set<Atom> tuples;
  AttrOverrides attrs;
  auto operator<=>(const StateKey&) const = default;
};

class Search {
 public:
  Search(const Ontology& ontology, const Registry& registry, const WorldMap& initial,
         const SafeguardStore* safeguards, const PlannerOptions& options)
      : ontology_(ontology),
        initial_(initial),
        safeguards_(options.prune_critical && safeguards && !safeguards->empty() ? safeguards : nullptr),
        options_(options),
        schemas_(schemas_of(registry, options.excluded_providers)) {
    for (const auto& [id, o] : initial.objects()) objects_.push_back(id);
  }

  PlanResult run(const Formula& goal) {
    struct Node {
      std::size_t parent;
      PlanStep step;
    };
    std::vector<Node> nodes;
    std::set<StateKey> visited;
    std::deque<std::pair<std::size_t, StateKey>> queue;  // node index (npos = root), state

    const StateKey root{initial_.tuples(), {}};
    const std::size_t npos = static_cast<std::size_t>(-1);
    if (reached(materialize(root), goal)) return AbstractPlan{};
    visited.insert(root);
    queue.emplace_back(npos, root);
    Unsolvable stats;
    while (!queue.empty()) {
      auto [node, key] = std::move(queue.front());
      queue.pop_front();
      if (++stats.expanded > options_.node_budget) {
        throw Error(Errc::SearchBudgetExceeded, std::to_string(options_.node_budget) + " nodes expanded");
      }
      const WorldMap state = materialize(key);
      for (auto& step : actions(state)) {
        WorldMap next = project_state(state, step.task.effect);
        if (safeguards_) {
          WorldMap during = state;
          for (const auto& place : step.region) {
            if (!step.active_marker.empty()) during.assert_atom(marker(step.active_marker, place));
          }
          if (safeguards_->any_critical(ontology_, during) || safeguards_->any_critical(ontology_, next)) {
            ++stats.pruned_critical;
            continue;
          }
        }
        StateKey next_key{next.tuples(), overrides(next)};
        if (!visited.insert(next_key).second) continue;
        nodes.push_back(Node{node, std::move(step)});
        const std::size_t id = nodes.size() - 1;
        if (reached(next, goal)) {
          std::vector<PlanStep> seq;
          for (std::size_t n = id; n != npos; n = nodes[n].parent) seq.push_back(nodes[n].step);
          std::reverse(seq.begin(), seq.end());
          return build_partial_order(std::move(seq), initial_);
        }
        queue.emplace_back(id, std::move(next_key));
      }
    }
    stats.visited = visited.size();
    stats.reason = "no plan reaches " + to_string(goal);
    return stats;
  }

 private:
  static Atom marker(const std::string& rel, const std::string& place) {
    Atom a;
    a.relation = rel;
    a.args = {Term::object(place)};
    return a;
  }

  static bool reached(const WorldMap& state, const Formula& goal) {
    if (free_variables(goal).empty()) return evaluate(goal, state);
    return !satisfying_bindings(goal, state).empty();
  }

  WorldMap materialize(const StateKey& key) const {
    WorldMap m;
    for (const auto& [id, o] : initial_.objects()) m.put_object(o);
    for (const auto& t : key.tuples) m.assert_atom(t);
    for (const auto& [k, v] : key.attrs) {
      const auto& obj = m.object(k.first);
      auto it = obj.attributes.find(k.second);
      m.set_attribute(k.first, k.second, AttributeValue{v, it == obj.attributes.end() ? "" : it->second.unit});
    }
    return m;
  }

  AttrOverrides overrides(const WorldMap& state) const {
    AttrOverrides out;
    for (const auto& [id, o] : state.objects()) {
      const auto& before = initial_.object(id).attributes;
      for (const auto& [name, v] : o.attributes) {
        auto it = before.find(name);
        if (it == before.end() || !(it->second.value == v.value)) out.emplace(std::make_pair(id, name), v.value);
      }
    }
    return out;
  }

  void extend(const Schema& s, const Binding& b, std::vector<std::string> rest, std::vector<Binding>& out) const {
    if (rest.empty()) {
      out.push_back(b);
      return;
    }
    const std::string v = rest.back();
    rest.pop_back();
    for (const auto& o : objects_) {
      Binding next = b;
      next[v] = Term::object(o);
      extend(s, next, rest, out);
    }
  }

  std::vector<PlanStep> actions(const WorldMap& state) const {
    std::vector<PlanStep> out;
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& s : schemas_) {
      for (const auto& b : satisfying_bindings(s.precondition, state)) {
        std::vector<std::string> rest;
        for (const auto& v : free_variables(s.effect)) {
          if (!b.count(v)) rest.push_back(v);
        }
        std::vector<Binding> full;
        extend(s, b, rest, full);
        for (auto& fb : full) {
          Task t{substitute(s.precondition, fb), substitute(s.effect, fb)};
          if (!seen.emplace(s.type, to_string(t)).second) continue;
          auto region = region_of(ontology_, t);
          const bool served = std::any_of(s.entries.begin(), s.entries.end(),
                                          [&](const RegistryEntry& e) { return e.serves(region); });
          if (!served) continue;
          if (projected_delta(state, t.effect).empty()) continue;
          out.push_back(PlanStep{0, s.type, std::move(fb), std::move(t), std::move(region), s.marker});
        }
      }
    }
    return out;
  }

  const Ontology& ontology_;
  const WorldMap& initial_;
  const SafeguardStore* safeguards_;
  const PlannerOptions& options_;
  std::vector<Schema> schemas_;
  std::vector<std::string> objects_;
};

}  // namespace

PlanResult plan(const Ontology& ontology, const Task& task, const Registry& registry, const WorldMap& initial,
                const SafeguardStore* safeguards, const PlannerOptions& options) {
  if (!task.precondition.is_true()) {
    const bool holds = free_variables(task.precondition).empty() ? evaluate(task.precondition, initial)
                                                                 : !satisfying_bindings(task.precondition, initial).empty();
    if (!holds) return Unsolvable{"task precondition does not hold in the initial state"};
  }
  const std::vector<Formula> goals =
      task.effect.kind == Formula::Kind::Or ? task.effect.children : std::vector<Formula>{task.effect};
  Search search(ontology, registry, initial, safeguards, options);
  Unsolvable last;
  for (const auto& g : goals) {
    auto r = search.run(g);
    if (std::holds_alternative<AbstractPlan>(r)) return r;
    last = std::get<Unsolvable>(r);
  }
  if (goals.size() > 1) last.reason = "no disjunct of " + to_string(task.effect) + " is reachable";
  return last;
}

PlanResult replan(const Ontology& ontology, const Task& task, const WorldMap& current,
                  const std::set<std::string>& excluded, const Registry& registry, const SafeguardStore* safeguards,
                  PlannerOptions options) {
  options.excluded_providers.insert(excluded.begin(), excluded.end());
  return plan(ontology, Task{Formula::truth(), task.effect}, registry, current, safeguards, options);
}

ArrangeResult arrange(const Ontology& ontology, const AbstractPlan& plan, const Registry& registry,
                      const WorldMap& initial, const IntentionChannel& channel,
                      const std::set<std::string>& excluded, const std::string& requester) {
  Workflow wf;
  wf.plan = plan;
  // Projected state before each step, replaying the plan in id order.
  std::map<std::size_t, WorldMap> before;
  WorldMap state = initial;
  for (const auto& s : plan.steps) {
    before.emplace(s.id, state);
    state = project_state(state, s.task.effect);
  }
  for (const std::size_t id : plan.topological()) {
    const PlanStep& s = plan.step(id);
    DiscoveryFilter filter;
    filter.service_type = s.service_type;
    filter.region = s.region;
    filter.excluded_providers = excluded;
    std::set<std::string> asked;
    auto found = registry.discover(s.task.effect, filter);
    std::vector<RegistryEntry> entries;
    for (auto& d : found) {
      if (asked.insert(d.entry.provider).second) entries.push_back(std::move(d.entry));
    }
    std::optional<std::pair<Commitment, const RegistryEntry*>> best;
    std::string refusals;
    for (const auto& e : entries) {
      auto reply = channel(e.provider, Intention{s.task, requester, std::nullopt, s.service_type});
      if (!reply) {
        refusals += " " + e.provider + ":no-answer";
        continue;
      }
      if (auto* r = std::get_if<Refusal>(&*reply)) {
        refusals += " " + e.provider + ":" + reason_name(r->reason);
        continue;
      }
      auto& c = std::get<Commitment>(*reply);
      const auto rank = [](const Commitment& x, const RegistryEntry& y) {
        return std::make_tuple(x.cost, y.description.attributes.avg_realization_time, x.provider);
      };
      if (!best || rank(c, e) < rank(best->first, *best->second)) best.emplace(std::move(c), &e);
    }
    if (!best) {
      return ArrangementFailure{id, "step " + std::to_string(id) + " (" + s.service_type + ") unassigned;" +
                                        (refusals.empty() ? std::string(" no candidates") : refusals)};
    }
    wf.assignments.emplace(id, std::move(best->first));
    const WorldMap& pre = before.at(id);
    wf.compensations.emplace(id, inverse_task(ontology, projected_delta(pre, s.task.effect), pre));
  }
  return wf;
}

}  // namespace hrc
