#pragma once

// Transaction protocol: per-step state machine, the messages exchanged with
// providers, and the Task Manager that runs transactions to an outcome.

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "hrc/planner.hpp"
#include "hrc/registry.hpp"
#include "hrc/repository.hpp"
#include "hrc/safeguards.hpp"
#include "hrc/services.hpp"

namespace hrc {

enum class StepState {
  Arranged,
  Invoked,
  Active,
  Completing,
  Completed,
  Canceling,
  Canceled,
  Faulted,
  Compensating,
  Compensated,
  CompensationFailed,
  Abandoned,
};

enum class StepEvent {
  Invoke,
  Progress,
  Completed,
  Acknowledge,
  Fault,
  Timeout,
  Cancel,
  Canceled,
  Compensate,
  Compensated,
  CompensationFailed,
  Abort,
};

const char* state_name(StepState s);
const char* event_name(StepEvent e);

// No further protocol messages are expected in these states.
bool is_terminal(StepState s);
// A provider (or a child transaction) is working on the step.
bool is_busy(StepState s);

// nullopt: the pair is a protocol violation.
std::optional<StepState> transition(StepState s, StepEvent e);

enum class Outcome { Completed, Unable, Canceled };
const char* outcome_name(Outcome o);

enum class TxnKind { Main, Compensation, Safeguard };
const char* kind_name(TxnKind k);

enum class MessageKind { Invoke, Cancel, Progress, Completed, Canceled, Fault, CriticalNotice };
const char* message_name(MessageKind k);

struct Message {
  MessageKind kind = MessageKind::Progress;
  std::string from;
  std::string to;
  std::uint64_t txn = 0;  // 0: not part of a transaction (local actions, notices)
  std::size_t step = 0;
  std::int64_t sent_at = 0;

  // Invoke
  Commitment commitment;
  ServiceKind service_kind = ServiceKind::Physical;
  std::string active_marker;
  std::vector<Atom> probes;

  // Provider replies. `diff` holds the changes since the previous message.
  int percent = 0;
  AtomDiff diff;
  AtomDiff net;  // Fault and Canceled: everything the execution changed
  std::string description;
  bool described = false;
  std::vector<std::pair<Atom, bool>> observed;
  std::optional<SituationReport> report;
  std::optional<CriticalSituationNotice> notice;
};

struct TraceRecord {
  std::int64_t tick = 0;
  std::uint64_t txn = 0;
  std::size_t step = 0;
  std::string actor;
  std::string event;
  std::string state_before;
  std::string state_after;
  nlohmann::json payload = nlohmann::json::object();

  [[nodiscard]] nlohmann::json to_json() const;
};

struct TmConfig {
  std::int64_t timeout_ticks = 10;
  std::size_t max_replans = 8;
  std::size_t search_budget = 100000;
  std::string id = "tm";
};

struct StepRecord {
  std::size_t id = 0;
  std::size_t plan_step = 0;  // 0 for diagnosis steps
  std::size_t generation = 0;
  PlanStep plan;
  Commitment commitment;
  ServiceKind service_kind = ServiceKind::Physical;
  std::optional<Task> compensation;
  StepState state = StepState::Arranged;
  bool diagnostic = false;
  std::int64_t last_heard = 0;
  std::int64_t invoked_at = -1;
  std::int64_t finished_at = -1;
  // Fault details.
  bool described = false;
  bool silent = false;
  AtomDiff actual;  // net changes as reported
  std::vector<std::pair<Atom, bool>> observed;
  // Repository before invocation.
  WorldMap before;
  std::vector<Atom> probes;
};

enum class Phase { Queued, Planning, Executing, Recovering, Paused, WindingDown, Terminal };
const char* phase_name(Phase p);

enum class RecoverStage { Wait, Diagnose, AwaitDiagnosis, Compensate, AwaitCompensation, Replan };
enum class WindStage { Cancel, Compensate, AwaitCompensation };

struct Transaction {
  std::uint64_t id = 0;
  std::size_t task_index = 0;
  TxnKind kind = TxnKind::Main;
  Task task;
  std::optional<std::uint64_t> parent;

  Phase phase = Phase::Queued;
  std::optional<Outcome> outcome;
  std::string note;

  Workflow workflow;
  std::map<std::size_t, std::size_t> current;  // plan step -> step record
  std::map<std::size_t, StepRecord> steps;
  std::size_t next_step = 1;
  std::size_t generation = 0;
  std::set<std::string> excluded;
  std::size_t replans = 0;
  std::vector<std::size_t> completion_order;

  std::int64_t submitted_at = 0;
  std::int64_t started_at = -1;
  std::int64_t ended_at = -1;

  // Recovery
  std::deque<std::size_t> faults;
  RecoverStage recover = RecoverStage::Wait;
  std::size_t diagnosis = 0;  // step record of the running diagnosis
  bool stale_effect = false;  // all steps done but the effect does not hold

  // Wind-down
  Outcome target = Outcome::Unable;
  WindStage wind = WindStage::Cancel;
  std::deque<std::size_t> to_compensate;

  std::optional<std::uint64_t> child;
  std::size_t child_for_step = 0;
  bool cancel_requested = false;

  // Safeguard resolution
  std::optional<std::uint64_t> activation;
  std::size_t alternative = 0;
  std::optional<std::uint64_t> paused_by;  // activation pausing this transaction
  bool resume = false;
  bool abandon_after_pause = false;

  [[nodiscard]] bool terminal() const { return phase == Phase::Terminal; }
};

// What the Task Manager needs from its surroundings.
class TaskManagerHost {
 public:
  virtual ~TaskManagerHost() = default;
  [[nodiscard]] virtual std::int64_t now() const = 0;
  [[nodiscard]] virtual const Ontology& ontology() const = 0;
  [[nodiscard]] virtual const Registry& registry() const = 0;
  virtual SafeguardStore& safeguards() = 0;
  virtual Repository& repository() = 0;
  // Used only to decide whether a finished transaction really achieved its effect.
  [[nodiscard]] virtual const WorldMap& authoritative() const = 0;
  virtual void send(Message m) = 0;
  virtual std::optional<IntentionReply> ask(const std::string& provider, const Intention& intention) = 0;
  virtual void trace(TraceRecord r) = 0;
};

class TaskManager {
 public:
  TaskManager(TaskManagerHost& host, TmConfig config);

  // Main transactions run one at a time in submission order.
  std::uint64_t submit(const Task& task, std::size_t task_index);
  // Throws UnknownTransaction or AlreadyTerminal.
  void cancel(std::uint64_t txn);

  void deliver(const Message& m);
  void on_activation(const SafeguardActivation& a);
  // Once per tick, after the inbox has been processed.
  void step();
  // Forces every open transaction to Unable (horizon reached).
  void abandon_all(const std::string& reason);

  [[nodiscard]] bool idle() const;
  [[nodiscard]] const std::map<std::uint64_t, Transaction>& transactions() const { return txns_; }
  [[nodiscard]] const Transaction& transaction(std::uint64_t id) const;
  // Tick at which the transaction answerable for an activation ended: the
  // enclosing transaction, or the resolution itself when it gave up.
  [[nodiscard]] std::optional<std::int64_t> resolution_ended(std::uint64_t activation) const;
  [[nodiscard]] std::size_t protocol_violations() const { return violations_; }

 private:
  struct Resolution {
    std::uint64_t activation = 0;
    std::string safeguard;
    Binding binding;
    std::set<std::string> location;
    std::size_t alternative = 0;  // 1-based, currently tried
    std::optional<std::uint64_t> child;
    std::optional<std::uint64_t> enclosing;
    std::optional<std::int64_t> ended_at;
    bool unresolvable = false;
  };

  Transaction& txn(std::uint64_t id);
  std::uint64_t open(TxnKind kind, const Task& task, std::optional<std::uint64_t> parent, std::size_t task_index);
  void start(Transaction& t);
  bool advance(Transaction& t);
  bool advance_planning(Transaction& t);
  bool advance_executing(Transaction& t);
  bool advance_recovering(Transaction& t);
  bool advance_paused(Transaction& t);
  bool advance_winding(Transaction& t);

  bool move(Transaction& t, StepRecord& s, StepEvent e, const std::string& note = "");
  void invoke(Transaction& t, StepRecord& s);
  void on_fault(Transaction& t, StepRecord& s);
  bool busy(const Transaction& t) const;
  void wind_down(Transaction& t, Outcome target, const std::string& why);
  void finish(Transaction& t, Outcome o, const std::string& why);
  void child_done(Transaction& child);
  void resolution_step(Resolution& r, std::optional<Outcome> last);
  bool start_diagnosis(Transaction& t, const std::set<std::string>& region, const std::vector<Atom>& probes);
  void assume_worst(Transaction& t, const StepRecord& s);
  std::optional<Task> compensation_for(const Transaction& t, const StepRecord& s);
  void check_timeouts(Transaction& t);
  void set_phase(Transaction& t, Phase p, const std::string& why);
  bool touches(const Transaction& t, const std::set<std::string>& location) const;
  void log(const Transaction* t, std::size_t step, const std::string& event, const std::string& before,
           const std::string& after, nlohmann::json payload = nlohmann::json::object());

  TaskManagerHost& host_;
  TmConfig config_;
  std::map<std::uint64_t, Transaction> txns_;
  std::deque<std::uint64_t> queue_;
  std::optional<std::uint64_t> active_main_;
  std::uint64_t next_id_ = 1;
  std::map<std::uint64_t, Resolution> resolutions_;
  std::set<std::pair<std::string, Binding>> self_resolving_;
  std::size_t violations_ = 0;
  bool halting_ = false;
};

}  // namespace hrc
