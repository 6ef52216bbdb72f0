#pragma once

// Forward state-space planner, partial-order recovery and arrangement.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "hrc/formula.hpp"
#include "hrc/ontology.hpp"
#include "hrc/registry.hpp"
#include "hrc/safeguards.hpp"
#include "hrc/services.hpp"
#include "hrc/world_map.hpp"

namespace hrc {

struct PlanStep {
  std::size_t id = 0;  // 1-based; 0 denotes the initial state in causal links
  std::string service_type;
  Binding binding;
  Task task;  // ground
  std::set<std::string> region;
  std::string active_marker;
};

struct CausalLink {
  std::size_t producer = 0;
  Atom atom;
  std::size_t consumer = 0;
  auto operator<=>(const CausalLink&) const = default;
};

struct AbstractPlan {
  std::vector<PlanStep> steps;
  std::set<std::pair<std::size_t, std::size_t>> order;
  std::set<CausalLink> causal_links;

  [[nodiscard]] bool empty() const { return steps.empty(); }
  [[nodiscard]] const PlanStep& step(std::size_t id) const;
  // Step ids, smallest available id first.
  [[nodiscard]] std::vector<std::size_t> topological() const;
  [[nodiscard]] std::vector<std::size_t> predecessors(std::size_t id) const;
};

struct Unsolvable {
  std::string reason;
  std::size_t expanded = 0;
  std::size_t visited = 0;
  std::size_t pruned_critical = 0;
  std::size_t frontier = 0;
};

using PlanResult = std::variant<AbstractPlan, Unsolvable>;

struct PlannerOptions {
  std::size_t node_budget = 100000;
  std::set<std::string> excluded_providers;
  // Safeguard resolution plans may pass through critical states.
  bool prune_critical = true;
};

// Applies a ground conjunctive effect. Throws DisjunctiveEffect.
WorldMap project_state(WorldMap state, const Formula& effect);

PlanResult plan(const Ontology& ontology, const Task& task, const Registry& registry, const WorldMap& initial,
                const SafeguardStore* safeguards, const PlannerOptions& options = {});

PlanResult replan(const Ontology& ontology, const Task& task, const WorldMap& current,
                  const std::set<std::string>& excluded, const Registry& registry, const SafeguardStore* safeguards,
                  PlannerOptions options = {});

// Orders and links an already linear sequence of ground steps.
AbstractPlan build_partial_order(std::vector<PlanStep> steps, const WorldMap& initial);

// --- arrangement -------------------------------------------------------------

struct Workflow {
  AbstractPlan plan;
  std::map<std::size_t, Commitment> assignments;
  // Inverse ground task per step; nullopt when some effect cannot be undone.
  std::map<std::size_t, std::optional<Task>> compensations;
};

struct ArrangementFailure {
  std::size_t step = 0;
  std::string reason;
};

using ArrangeResult = std::variant<Workflow, ArrangementFailure>;

// Delivers an intention to a provider; nullopt when it does not answer.
using IntentionChannel = std::function<std::optional<IntentionReply>(const std::string& provider, const Intention&)>;

ArrangeResult arrange(const Ontology& ontology, const AbstractPlan& plan, const Registry& registry,
                      const WorldMap& initial, const IntentionChannel& channel,
                      const std::set<std::string>& excluded = {}, const std::string& requester = "tm");

// The ground task undoing `diff` (pre: true); nullopt when some changed
// relation is not invertible or an attribute had no previous value.
std::optional<Task> inverse_task(const Ontology& ontology, const AtomDiff& diff, const WorldMap& before);

// Changes a ground effect would make to `state`.
AtomDiff projected_delta(const WorldMap& state, const Formula& effect);

}  // namespace hrc
