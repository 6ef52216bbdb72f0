#pragma once

// Discrete-time simulation: an authoritative world, provider actors that
// execute commitments, and a Task Manager exchanging messages with them.
//
// Tick order: scripted events, one inbox message per provider (id order),
// executions advance, provider local monitoring, global safeguard check,
// Task Manager inbox and step, clock advance.

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "hrc/frp.hpp"
#include "hrc/ontology.hpp"
#include "hrc/registry.hpp"
#include "hrc/safeguards.hpp"
#include "hrc/services.hpp"

namespace hrc {

struct FailureSpec {
  std::string provider;
  // Exactly one trigger: an absolute tick, or the n-th invocation (1-based).
  std::optional<std::int64_t> at_tick;
  std::optional<std::size_t> ordinal;
  std::int64_t after_ticks = 1;  // ordinal trigger: ticks of progress before failing
  FailureMode mode;
};

struct WorldEvent {
  std::int64_t tick = 0;
  std::vector<Atom> atoms;  // applied with effect semantics (negated atoms retract)
};

struct CancelEvent {
  std::int64_t tick = 0;
  std::size_t task = 0;  // index into Scenario::tasks
};

struct WithdrawEvent {
  std::int64_t tick = 0;
  std::string provider;
};

struct TaskSpec {
  Task task;
  std::int64_t submit_at = 0;
};

struct SimConfig {
  std::uint64_t seed = 0;
  std::int64_t max_ticks = 500;
  std::int64_t timeout_ticks = 10;
  std::size_t max_replans = 8;
  std::size_t search_budget = 100000;
  std::int64_t response_bound = 20;
  std::int64_t jitter = 0;  // extra ticks per execution, drawn from [0, jitter]
};

struct Scenario {
  std::string name;
  Ontology ontology;
  WorldMap map;
  std::vector<Provider> providers;
  std::vector<TaskSpec> tasks;
  std::vector<Safeguard> safeguards;
  std::vector<FailureSpec> failures;
  std::vector<WorldEvent> events;
  std::vector<CancelEvent> cancellations;
  std::vector<WithdrawEvent> withdrawals;
  SimConfig config;
};

// Throws InvalidScenario (or the ontology/description error) on the first problem.
void validate_scenario(const Scenario& s);

struct TaskResult {
  std::size_t index = 0;
  std::uint64_t txn = 0;  // 0: never submitted
  std::optional<Outcome> outcome;
  std::int64_t submitted_at = -1;
  std::int64_t ended_at = -1;
  std::size_t replans = 0;
  std::string reason;
  bool effect_holds = false;  // in the final world
};

struct SafetyViolation {
  std::string safeguard;
  Binding binding;
  std::int64_t tick = 0;
};

struct RunResult {
  std::vector<TaskResult> tasks;
  std::int64_t ticks = 0;
  bool horizon_exceeded = false;
  std::vector<TraceRecord> trace;
  std::vector<SafetyViolation> safety_violations;
  std::size_t protocol_violations = 0;
  std::size_t activations = 0;
  WorldMap final_map;
  // World at the moment each main transaction started.
  std::map<std::uint64_t, WorldMap> start_maps;
};

class Simulation : public TaskManagerHost, public Environment {
 public:
  explicit Simulation(Scenario scenario);

  // Runs until everything is settled or the horizon is reached.
  RunResult run();

  void tick_once();
  [[nodiscard]] bool settled() const;
  [[nodiscard]] RunResult result() const;

  [[nodiscard]] const WorldMap& world() const { return world_; }
  [[nodiscard]] TaskManager& task_manager() { return tm_; }
  [[nodiscard]] const Scenario& scenario() const { return scenario_; }

  // TaskManagerHost / Environment
  [[nodiscard]] std::int64_t now() const override { return clock_; }
  [[nodiscard]] const Ontology& ontology() const override { return scenario_.ontology; }
  [[nodiscard]] const Registry& registry() const override { return registry_; }
  SafeguardStore& safeguards() override { return store_; }
  Repository& repository() override { return repository_; }
  [[nodiscard]] const WorldMap& authoritative() const override { return world_; }
  void send(Message m) override;
  std::optional<IntentionReply> ask(const std::string& provider, const Intention& intention) override;
  void trace(TraceRecord r) override;
  [[nodiscard]] const WorldMap& map() const override { return world_; }
  AtomDiff apply(const std::vector<Atom>& atoms, const std::string& cause) override;

 private:
  struct Running {
    std::uint64_t txn = 0;
    std::size_t step = 0;
    Execution exec;
    std::size_t reported = 0;  // changes already sent
  };
  struct Actor {
    Provider provider;
    std::deque<Message> inbox;
    std::vector<Running> running;
    std::vector<Running> local;
    bool dead = false;
    std::size_t invocations = 0;
    std::vector<FailureSpec> pending;  // tick-triggered failures waiting for an execution
    std::set<std::pair<std::string, Binding>> notified;
  };

  void scripted();
  void provider_inbox(Actor& a);
  void advance_executions(Actor& a);
  void monitor(Actor& a);
  void sample_safety();
  void emit(const std::string& actor, const std::string& event, std::uint64_t txn, std::size_t step,
            nlohmann::json payload);
  AtomDiff fresh_changes(Running& r) const;

  Scenario scenario_;
  WorldMap world_;
  Registry registry_;
  SafeguardStore store_;
  Repository repository_;
  TaskManager tm_;
  std::map<std::string, Actor> actors_;
  std::deque<Message> tm_inbox_;
  std::int64_t clock_ = 0;
  std::mt19937_64 rng_;
  std::map<std::size_t, std::uint64_t> task_txn_;
  std::vector<TraceRecord> trace_;
  std::map<std::uint64_t, WorldMap> start_maps_;
  bool horizon_ = false;
  std::pair<std::uint64_t, std::size_t> cause_{0, 0};  // execution applying effects right now

  // Safety log: per tick, the critical bindings and the bindings whose
  // situation is safe.
  std::vector<std::set<std::pair<std::string, Binding>>> critical_;
  std::vector<std::set<std::pair<std::string, Binding>>> safe_;
  std::set<std::pair<std::string, Binding>> seen_;
};

}  // namespace hrc
