#include <algorithm>

#include "hrc/error.hpp"
#include "hrc/evaluate.hpp"
#include "hrc/frp.hpp"

namespace hrc {

namespace {

nlohmann::json diff_json(const AtomDiff& d) {
  auto out = nlohmann::json::array();
  for (const auto& c : d) out.push_back({{"atom", to_string(c.atom)}, {"now_true", c.now_true}});
  return out;
}

bool intersects(const std::set<std::string>& a, const std::set<std::string>& b) {
  return std::any_of(a.begin(), a.end(), [&](const auto& x) { return b.count(x) != 0; });
}

}  // namespace

TaskManager::TaskManager(TaskManagerHost& host, TmConfig config) : host_(host), config_(std::move(config)) {}

Transaction& TaskManager::txn(std::uint64_t id) {
  auto it = txns_.find(id);
  if (it == txns_.end()) throw Error(Errc::UnknownTransaction, "transaction " + std::to_string(id));
  return it->second;
}

const Transaction& TaskManager::transaction(std::uint64_t id) const {
  auto it = txns_.find(id);
  if (it == txns_.end()) throw Error(Errc::UnknownTransaction, "transaction " + std::to_string(id));
  return it->second;
}

void TaskManager::log(const Transaction* t, std::size_t step, const std::string& event, const std::string& before,
                      const std::string& after, nlohmann::json payload) {
  TraceRecord r;
  r.tick = host_.now();
  r.txn = t ? t->id : 0;
  r.step = step;
  r.actor = config_.id;
  r.event = event;
  r.state_before = before;
  r.state_after = after;
  r.payload = std::move(payload);
  host_.trace(std::move(r));
}

void TaskManager::set_phase(Transaction& t, Phase p, const std::string& why) {
  if (t.phase == p) return;
  log(&t, 0, "phase", phase_name(t.phase), phase_name(p), {{"reason", why}});
  t.phase = p;
}

std::uint64_t TaskManager::open(TxnKind kind, const Task& task, std::optional<std::uint64_t> parent,
                                std::size_t task_index) {
  Transaction t;
  t.id = next_id_++;
  t.kind = kind;
  t.task = task;
  t.parent = parent;
  t.task_index = task_index;
  t.submitted_at = host_.now();
  nlohmann::json p{{"kind", kind_name(kind)}, {"task", to_string(task)}};
  if (parent) p["parent"] = *parent;
  log(&t, 0, "submit", "", phase_name(t.phase), p);
  const auto id = t.id;
  txns_.emplace(id, std::move(t));
  return id;
}

std::uint64_t TaskManager::submit(const Task& task, std::size_t task_index) {
  const auto id = open(TxnKind::Main, task, std::nullopt, task_index);
  queue_.push_back(id);
  return id;
}

void TaskManager::start(Transaction& t) {
  t.started_at = host_.now();
  set_phase(t, Phase::Planning, "start");
}

void TaskManager::cancel(std::uint64_t id) {
  auto it = txns_.find(id);
  if (it == txns_.end()) throw Error(Errc::UnknownTransaction, "transaction " + std::to_string(id));
  Transaction& t = it->second;
  if (t.terminal()) throw Error(Errc::AlreadyTerminal, "transaction " + std::to_string(id));
  log(&t, 0, "cancel-request", phase_name(t.phase), phase_name(t.phase));
  if (t.phase == Phase::Queued) {
    queue_.erase(std::remove(queue_.begin(), queue_.end(), id), queue_.end());
    finish(t, Outcome::Canceled, "canceled before start");
    return;
  }
  if (t.phase == Phase::WindingDown) {
    t.target = Outcome::Canceled;
    return;
  }
  for (auto& [aid, r] : resolutions_) {
    if (r.enclosing == id) r.enclosing.reset();
  }
  if (t.child) {
    t.cancel_requested = true;
    return;
  }
  wind_down(t, Outcome::Canceled, "canceled on request");
}

bool TaskManager::move(Transaction& t, StepRecord& s, StepEvent e, const std::string& note) {
  const auto next = transition(s.state, e);
  if (!next) {
    ++violations_;
    log(&t, s.id, "protocol-violation", state_name(s.state), state_name(s.state), {{"event", event_name(e)}});
    return false;
  }
  nlohmann::json p = nlohmann::json::object();
  if (!note.empty()) p["note"] = note;
  log(&t, s.id, event_name(e), state_name(s.state), state_name(*next), p);
  s.state = *next;
  return true;
}

bool TaskManager::busy(const Transaction& t) const {
  return std::any_of(t.steps.begin(), t.steps.end(), [](const auto& kv) { return is_busy(kv.second.state); });
}

void TaskManager::invoke(Transaction& t, StepRecord& s) {
  s.before = host_.repository().map();
  s.invoked_at = host_.now();
  s.last_heard = host_.now();
  Message m;
  m.kind = MessageKind::Invoke;
  m.from = config_.id;
  m.to = s.commitment.provider;
  m.txn = t.id;
  m.step = s.id;
  m.sent_at = host_.now();
  m.commitment = s.commitment;
  m.service_kind = s.service_kind;
  m.active_marker = s.plan.active_marker;
  m.probes = s.probes;
  move(t, s, StepEvent::Invoke, s.commitment.provider);
  host_.send(std::move(m));
}

void TaskManager::deliver(const Message& m) {
  const auto& onto = host_.ontology();
  if (m.kind == MessageKind::CriticalNotice) {
    nlohmann::json p{{"provider", m.from}};
    if (m.notice) {
      p["safeguard"] = m.notice->safeguard_id;
      p["binding"] = to_string(m.notice->binding);
      p["self_resolving"] = m.notice->self_resolving;
      if (m.notice->self_resolving) self_resolving_.insert({m.notice->safeguard_id, m.notice->binding});
    }
    log(nullptr, 0, "notice", "", "", p);
    return;
  }
  if (!m.diff.empty()) host_.repository().apply(onto, m.diff, host_.now());
  if (m.txn == 0) {
    log(nullptr, 0, "local-report", "", "", {{"provider", m.from}, {"diff", diff_json(m.diff)}});
    return;
  }
  auto it = txns_.find(m.txn);
  if (it == txns_.end() || !it->second.steps.count(m.step)) {
    ++violations_;
    log(nullptr, m.step, "protocol-violation", "", "", {{"message", message_name(m.kind)}, {"reason", "unknown step"}});
    return;
  }
  Transaction& t = it->second;
  StepRecord& s = t.steps.at(m.step);
  s.last_heard = host_.now();
  if (is_terminal(s.state) || s.state == StepState::Arranged) {
    ++violations_;
    log(&t, s.id, "protocol-violation", state_name(s.state), state_name(s.state), {{"message", message_name(m.kind)}});
    return;
  }
  // A message the step cannot accept is discarded and the step is faulted.
  auto violated = [&] {
    s.silent = false;
    s.described = false;
    log(&t, s.id, "discard", state_name(s.state), state_name(StepState::Faulted), {{"message", message_name(m.kind)}});
    s.state = StepState::Faulted;
    on_fault(t, s);
  };
  switch (m.kind) {
    case MessageKind::Progress:
      if (!move(t, s, StepEvent::Progress, std::to_string(m.percent) + "%")) violated();
      break;
    case MessageKind::Completed:
      if (!move(t, s, StepEvent::Completed)) {
        violated();
        break;
      }
      s.actual = m.net;
      if (s.diagnostic && m.report) {
        host_.repository().merge_region(onto, *m.report, s.commitment.region);
        auto obs = nlohmann::json::array();
        for (const auto& [a, v] : m.report->observed) obs.push_back({{"atom", to_string(a)}, {"true", v}});
        log(&t, s.id, "diagnosis", state_name(s.state), state_name(s.state), {{"observed", obs}});
      }
      move(t, s, StepEvent::Acknowledge);
      s.finished_at = host_.now();
      if (!s.diagnostic) t.completion_order.push_back(s.id);
      break;
    case MessageKind::Canceled:
      s.actual = m.net;
      if (move(t, s, StepEvent::Canceled)) {
        s.finished_at = host_.now();
      } else {
        violated();
      }
      break;
    case MessageKind::Fault: {
      s.described = m.described;
      s.observed = m.observed;
      s.actual = m.net;
      host_.repository().observe(onto, m.observed, host_.now());
      if (!move(t, s, StepEvent::Fault, m.description)) {
        violated();
        break;
      }
      if (s.state == StepState::Faulted) on_fault(t, s);
      break;
    }
    default:
      ++violations_;
      log(&t, s.id, "protocol-violation", state_name(s.state), state_name(s.state),
          {{"message", message_name(m.kind)}});
      violated();
      break;
  }
}

void TaskManager::on_fault(Transaction& t, StepRecord& s) {
  s.finished_at = host_.now();
  t.excluded.insert(s.commitment.provider);
  if (s.diagnostic) return;
  switch (t.phase) {
    case Phase::Executing:
      t.faults.push_back(s.id);
      t.recover = RecoverStage::Wait;
      set_phase(t, Phase::Recovering, "step " + std::to_string(s.id) + " faulted");
      break;
    case Phase::Recovering:
    case Phase::Paused:
      t.faults.push_back(s.id);
      break;
    default:
      break;
  }
}

void TaskManager::check_timeouts(Transaction& t) {
  const auto now = host_.now();
  for (auto& [id, s] : t.steps) {
    const bool waiting =
        s.state == StepState::Invoked || s.state == StepState::Active || s.state == StepState::Canceling;
    if (!waiting || now - s.last_heard <= config_.timeout_ticks) continue;
    if (s.state == StepState::Canceling) {
      move(t, s, StepEvent::Timeout, "no reply to cancel");
      s.finished_at = now;
      continue;
    }
    s.silent = true;
    move(t, s, StepEvent::Timeout, "no message for " + std::to_string(now - s.last_heard) + " ticks");
    on_fault(t, s);
  }
}

void TaskManager::wind_down(Transaction& t, Outcome target, const std::string& why) {
  t.target = target;
  t.wind = WindStage::Cancel;
  t.note = why;
  t.to_compensate.clear();
  set_phase(t, Phase::WindingDown, why);
}

void TaskManager::finish(Transaction& t, Outcome o, const std::string& why) {
  for (auto& [id, s] : t.steps) {
    if (!is_terminal(s.state)) move(t, s, StepEvent::Abort, why);
  }
  log(&t, 0, "outcome", phase_name(t.phase), phase_name(Phase::Terminal),
      {{"outcome", outcome_name(o)}, {"reason", why}, {"replans", t.replans}});
  t.phase = Phase::Terminal;
  t.outcome = o;
  t.ended_at = host_.now();
  t.note = why;
  if (active_main_ == t.id) active_main_.reset();
  if (halting_) return;
  if (t.parent) child_done(t);
  for (auto& [aid, r] : resolutions_) {
    if (r.child == t.id && !r.ended_at) {
      resolution_step(r, o);
      break;
    }
  }
}

void TaskManager::child_done(Transaction& child) {
  Transaction& p = txn(*child.parent);
  if (p.child != child.id) return;
  p.child.reset();
  StepRecord& s = p.steps.at(p.child_for_step);
  move(p, s, child.outcome == Outcome::Completed ? StepEvent::Compensated : StepEvent::CompensationFailed,
       "transaction " + std::to_string(child.id));
  s.finished_at = host_.now();
  if (p.phase == Phase::Recovering) {
    if (!p.faults.empty()) p.faults.pop_front();
    p.recover = RecoverStage::Diagnose;
  } else if (p.phase == Phase::WindingDown) {
    p.wind = WindStage::Compensate;
  }
  if (p.cancel_requested && p.phase != Phase::WindingDown) {
    p.cancel_requested = false;
    wind_down(p, Outcome::Canceled, "canceled on request");
  }
}

bool TaskManager::touches(const Transaction& t, const std::set<std::string>& location) const {
  if (location.empty()) return true;
  for (const auto& [id, s] : t.steps) {
    if (s.diagnostic) continue;
    if (s.state != StepState::Arranged && s.state != StepState::Invoked && s.state != StepState::Active) continue;
    if (intersects(s.plan.region, location) || intersects(s.commitment.region, location)) return true;
  }
  return false;
}

void TaskManager::on_activation(const SafeguardActivation& a) {
  const auto& onto = host_.ontology();
  const auto& sg = host_.safeguards().get(a.safeguard_id);
  nlohmann::json p{{"safeguard", a.safeguard_id}, {"binding", to_string(a.binding)}, {"activation", a.id}};
  if (self_resolving_.count({a.safeguard_id, a.binding})) {
    log(nullptr, 0, "safeguard-local", "", "", p);
    return;
  }
  Resolution r;
  r.activation = a.id;
  r.safeguard = a.safeguard_id;
  r.binding = a.binding;
  const auto critical = all_atoms(substitute(sg.critical, a.binding));
  r.location = locations_of(onto, critical);

  // The critical facts become known to the repository.
  std::vector<std::pair<Atom, bool>> facts;
  for (const auto& atom : critical) {
    if (is_computed_relation(atom.relation)) continue;
    facts.emplace_back(atom.positive(), host_.authoritative().holds(atom.positive()));
  }
  host_.repository().observe(onto, facts, host_.now());

  if (active_main_) {
    Transaction& m = txn(*active_main_);
    const bool running = m.phase == Phase::Executing || m.phase == Phase::Recovering;
    if (running && touches(m, r.location)) {
      r.enclosing = m.id;
      for (auto& [id, s] : m.steps) {
        if (s.state != StepState::Invoked && s.state != StepState::Active) continue;
        if (!r.location.empty() && !intersects(s.plan.region, r.location) &&
            !intersects(s.commitment.region, r.location))
          continue;
        Message c;
        c.kind = MessageKind::Cancel;
        c.from = config_.id;
        c.to = s.commitment.provider;
        c.txn = m.id;
        c.step = s.id;
        c.sent_at = host_.now();
        move(m, s, StepEvent::Cancel, "safeguard " + a.safeguard_id);
        host_.send(std::move(c));
      }
      if (m.phase == Phase::Executing) {
        m.paused_by = a.id;
        set_phase(m, Phase::Paused, "safeguard " + a.safeguard_id);
      }
      p["enclosing"] = m.id;
    }
  }
  log(nullptr, 0, "safeguard-activation", "", "", p);
  auto& stored = resolutions_[a.id] = r;
  resolution_step(stored, std::nullopt);
}

void TaskManager::resolution_step(Resolution& r, std::optional<Outcome> last) {
  auto& store = host_.safeguards();
  const auto& sg = store.get(r.safeguard);
  nlohmann::json p{{"safeguard", r.safeguard}, {"binding", to_string(r.binding)}, {"activation", r.activation}};
  if (last == Outcome::Completed) {
    store.record_resolution(r.activation, SafeguardActivation::Status::Resolved, r.alternative, host_.now());
    r.ended_at = host_.now();
    p["alternative"] = r.alternative;
    log(nullptr, 0, "safeguard-resolved", "", "", p);
    if (r.enclosing) {
      Transaction& m = txn(*r.enclosing);
      if (m.phase == Phase::Paused && m.paused_by == r.activation) m.resume = true;
    }
    return;
  }
  if (r.alternative >= sg.safe_alternatives.size()) {
    store.record_resolution(r.activation, SafeguardActivation::Status::Unresolvable, 0, host_.now());
    r.ended_at = host_.now();
    r.unresolvable = true;
    log(nullptr, 0, "safeguard-unresolvable", "", "", p);
    if (r.enclosing) {
      Transaction& m = txn(*r.enclosing);
      if (!m.terminal()) {
        if (m.phase == Phase::Paused && m.paused_by == r.activation) {
          m.abandon_after_pause = true;
        } else if (m.phase != Phase::WindingDown) {
          wind_down(m, Outcome::Unable, "safeguard " + r.safeguard + " unresolvable");
        }
      }
    }
    return;
  }
  const Task ground = sg.task(r.alternative, r.binding);
  ++r.alternative;
  const auto id = open(TxnKind::Safeguard, Task{Formula::truth(), ground.effect}, std::nullopt, 0);
  Transaction& c = txn(id);
  c.activation = r.activation;
  c.alternative = r.alternative;
  start(c);
  r.child = id;
}

std::optional<std::int64_t> TaskManager::resolution_ended(std::uint64_t activation) const {
  auto it = resolutions_.find(activation);
  if (it == resolutions_.end()) return std::nullopt;
  const auto& r = it->second;
  if (r.enclosing) {
    const auto& t = txns_.at(*r.enclosing);
    if (t.terminal()) return t.ended_at;
  }
  if (r.unresolvable) return r.ended_at;
  return std::nullopt;
}

bool TaskManager::idle() const {
  if (!queue_.empty()) return false;
  return std::all_of(txns_.begin(), txns_.end(), [](const auto& kv) { return kv.second.terminal(); });
}

void TaskManager::abandon_all(const std::string& reason) {
  halting_ = true;
  for (auto& [id, t] : txns_) {
    if (!t.terminal()) finish(t, Outcome::Unable, reason);
  }
  queue_.clear();
}

}  // namespace hrc
