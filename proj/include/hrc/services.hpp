#pragma once

// Service descriptions, providers and their execution model.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "hrc/formula.hpp"
#include "hrc/ontology.hpp"
#include "hrc/safeguards.hpp"
#include "hrc/world_map.hpp"

namespace hrc {

enum class ServiceKind { Physical, Cognitive, Software };
enum class ProviderKind { Device, Human };

const char* kind_name(ServiceKind k);
const char* kind_name(ProviderKind k);

struct Parameter {
  std::string name;
  std::string type;
  bool operator==(const Parameter&) const = default;
};

// A set of place ids, or unbounded.
struct OperationRange {
  std::optional<std::set<std::string>> places;

  [[nodiscard]] bool bounded() const { return places.has_value(); }
  [[nodiscard]] bool covers(const std::set<std::string>& region) const;
  [[nodiscard]] bool intersects(const std::set<std::string>& region) const;
  bool operator==(const OperationRange&) const = default;
};

struct ServiceAttributes {
  OperationRange operation_range;
  double cost = 0.0;
  std::int64_t avg_realization_time = 1;
  bool operator==(const ServiceAttributes&) const = default;
};

struct ServiceDescription {
  std::string type_name;
  ServiceKind kind = ServiceKind::Physical;
  std::vector<Parameter> inputs;
  std::vector<Parameter> outputs;
  Formula precondition;
  Formula effect;
  ServiceAttributes attributes;
  // Unary relation asserted over the step's region while it executes
  // (e.g. robotActiveIn); empty for none.
  std::string active_marker;
  bool operator==(const ServiceDescription&) const = default;
};

struct ProviderBehavior {
  std::map<std::string, std::int64_t> durations;  // per type_name; default avg_realization_time
  std::size_t capacity = 1;
};

struct Provider {
  std::string id;
  ProviderKind kind = ProviderKind::Device;
  std::string world_object;
  std::vector<ServiceDescription> offered;
  ProviderBehavior behavior;

  [[nodiscard]] const ServiceDescription* find(const std::string& type_name) const;
  [[nodiscard]] std::int64_t duration(const ServiceDescription& d) const;
};

struct Intention {
  Task task;
  std::string requester;
  std::optional<std::int64_t> deadline;
  std::string service_type;  // empty: any offered type
};

struct Commitment {
  std::string provider;
  std::string service_type;
  Task task;  // ground
  double cost = 0.0;
  std::int64_t duration = 1;
  Binding inputs;
  std::int64_t expiry = 0;
  std::set<std::string> region;
};

enum class RefusalReason { NoMatchingService, OutOfRange, Busy, Expired };
const char* reason_name(RefusalReason r);

struct Refusal {
  RefusalReason reason = RefusalReason::NoMatchingService;
  std::string detail;
};

using IntentionReply = std::variant<Commitment, Refusal>;

struct SituationReport {
  std::vector<std::pair<Atom, bool>> observed;
  std::int64_t at = 0;
  std::string observer;
};

struct CriticalSituationNotice {
  std::string provider;
  std::string safeguard_id;
  Binding binding;
  std::set<std::string> location;
  bool self_resolving = false;
  std::optional<Task> local_action;  // ground, effect equal to some safe alternative
  std::string local_service;
  std::size_t alternative = 0;       // 1-based
};

// Region of a ground task: the places named by its atoms.
std::set<std::string> region_of(const Ontology& ontology, const Task& task);

// Places a human accepts to work in (PreferredEnvironment), if declared.
std::optional<std::set<std::string>> preferred_places(const WorldMap& map, const std::string& object_id);

// Throws InvalidDescription.
void validate_description(const Ontology& ontology, const ServiceDescription& d);
// Descriptions plus the range/position consistency. Throws InvalidDescription.
void validate_provider(const Ontology& ontology, const WorldMap& map, const Provider& p);

// Unifies the description's effect and precondition conjuncts with the
// task's (each task conjunct covered by exactly one pattern conjunct).
std::optional<Binding> match_description(const ServiceDescription& d, const Task& task);

IntentionReply handle_intention(const Ontology& ontology, const Provider& provider, const Intention& intention,
                                const WorldMap& map, std::int64_t now, std::size_t active_executions);

std::vector<CriticalSituationNotice> monitor_local(const Ontology& ontology, const Provider& provider,
                                                   const SafeguardStore& store, const WorldMap& map);

// Ground atoms of the map whose location arguments fall in `region`, each
// marked true, plus the probe atoms with their truth.
SituationReport observe(const Ontology& ontology, const WorldMap& map, const std::set<std::string>& region,
                        const std::vector<Atom>& probes, std::int64_t now, const std::string& observer);

// --- execution -------------------------------------------------------------

// An attribute assignment shows up as eq(attr(o, "a"), v) with now_true set.
struct AtomChange {
  Atom atom;  // positive
  bool now_true = false;
  bool operator==(const AtomChange&) const = default;
};
using AtomDiff = std::vector<AtomChange>;

void apply_diff(WorldMap& map, const AtomDiff& diff);
std::string to_string(const AtomDiff& diff);

struct FailureMode {
  enum class Kind { FaultWithDescription, SilentFailure, PartialEffect };
  Kind kind = Kind::FaultWithDescription;
  double fraction = 0.5;       // PartialEffect only
  bool silent_after = false;   // PartialEffect: go silent instead of faulting
};

// The authoritative world as seen by an executing provider.
class Environment {
 public:
  virtual ~Environment() = default;
  [[nodiscard]] virtual const WorldMap& map() const = 0;
  [[nodiscard]] virtual const Ontology& ontology() const = 0;
  [[nodiscard]] virtual std::int64_t now() const = 0;
  // Makes each ground effect atom true (see apply_effect_atom).
  virtual AtomDiff apply(const std::vector<Atom>& atoms, const std::string& cause) = 0;
};

// Environment over a plain map without tracing.
class MapEnvironment : public Environment {
 public:
  MapEnvironment(const Ontology& ontology, WorldMap& map, std::int64_t now = 0)
      : ontology_(ontology), map_(map), now_(now) {}
  [[nodiscard]] const WorldMap& map() const override { return map_; }
  [[nodiscard]] const Ontology& ontology() const override { return ontology_; }
  [[nodiscard]] std::int64_t now() const override { return now_; }
  AtomDiff apply(const std::vector<Atom>& atoms, const std::string& cause) override;
  void set_now(std::int64_t now) { now_ = now; }

 private:
  const Ontology& ontology_;
  WorldMap& map_;
  std::int64_t now_;
};

// Shared by environments: applies atoms in order and reports what changed.
AtomDiff apply_atoms(WorldMap& map, const std::vector<Atom>& atoms);

struct ExecProgress {
  int percent = 0;
};
struct ExecCompleted {
  AtomDiff diff;
  std::optional<SituationReport> report;
};
struct ExecFault {
  std::string description;
  AtomDiff diff;
  std::vector<std::pair<Atom, bool>> observed;
};
struct ExecSilent {};
struct ExecCanceled {
  AtomDiff diff;
};

using ExecutionEvent = std::variant<ExecProgress, ExecCompleted, ExecFault, ExecSilent, ExecCanceled>;

// One commitment being carried out; advanced once per tick.
class Execution {
 public:
  Execution(Commitment c, ServiceKind kind, std::string active_marker, std::vector<Atom> probes = {});

  // Failure triggered after `after_ticks` ticks of execution (0 = at start).
  void arm(FailureMode mode, std::int64_t after_ticks);

  ExecutionEvent tick(Environment& env);
  ExecCanceled cancel(Environment& env);

  [[nodiscard]] const Commitment& commitment() const { return commitment_; }
  [[nodiscard]] bool finished() const { return finished_; }
  [[nodiscard]] bool silent() const { return silent_; }
  [[nodiscard]] std::int64_t elapsed() const { return elapsed_; }
  [[nodiscard]] const AtomDiff& changes() const { return changes_; }

 private:
  std::vector<Atom> marker_atoms() const;
  void record(const AtomDiff& d);
  ExecutionEvent fail(Environment& env);
  AtomDiff drop_marker(Environment& env);
  AtomDiff net_changes() const;

  Commitment commitment_;
  ServiceKind kind_;
  std::string marker_;
  std::vector<Atom> probes_;
  std::optional<FailureMode> failure_;
  std::int64_t fail_after_ = 0;
  std::int64_t elapsed_ = 0;
  bool started_ = false;
  bool finished_ = false;
  bool silent_ = false;
  AtomDiff changes_;
  std::map<Atom, std::pair<bool, bool>> net_;  // atom -> (before, now)
};

// Effect atoms in deterministic order: lexicographic, positives first.
std::vector<Atom> effect_atoms(const Formula& effect);

}  // namespace hrc
