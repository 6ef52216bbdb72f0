#include "hrc/simulation.hpp"

#include <algorithm>

#include "hrc/error.hpp"
#include "hrc/evaluate.hpp"

namespace hrc {

namespace {

nlohmann::json diff_json(const AtomDiff& d) {
  auto out = nlohmann::json::array();
  for (const auto& c : d) out.push_back({{"atom", to_string(c.atom)}, {"now_true", c.now_true}});
  return out;
}

TmConfig tm_config(const SimConfig& c) {
  TmConfig t;
  t.timeout_ticks = c.timeout_ticks;
  t.max_replans = c.max_replans;
  t.search_budget = c.search_budget;
  return t;
}

const ServiceDescription* offered(const Provider& p, const std::string& type) {
  for (const auto& d : p.offered) {
    if (d.type_name == type) return &d;
  }
  return nullptr;
}

}  // namespace

void validate_scenario(const Scenario& s) {
  const auto report = validate_map(s.ontology, s.map);
  if (!report.ok()) throw Error(Errc::InvalidScenario, "map: " + report.violations.front().message);
  std::set<std::string> ids;
  for (const auto& p : s.providers) {
    if (p.id.empty() || !ids.insert(p.id).second) throw Error(Errc::InvalidScenario, "provider id '" + p.id + "'");
    validate_provider(s.ontology, s.map, p);
  }
  for (std::size_t i = 0; i < s.tasks.size(); ++i) {
    const auto& t = s.tasks[i].task;
    validate_formula(s.ontology, t.precondition);
    validate_formula(s.ontology, t.effect);
    if (!free_variables(t.precondition).empty() || !free_variables(t.effect).empty()) {
      throw Error(Errc::InvalidScenario, "task " + std::to_string(i) + " is not ground");
    }
    if (s.tasks[i].submit_at < 0) throw Error(Errc::InvalidScenario, "task " + std::to_string(i) + " submit tick");
  }
  for (const auto& f : s.failures) {
    if (!ids.count(f.provider)) throw Error(Errc::UnknownProvider, "failure for " + f.provider);
    if (f.at_tick.has_value() == f.ordinal.has_value()) {
      throw Error(Errc::InvalidScenario, "failure for " + f.provider + " needs exactly one trigger");
    }
    if (f.mode.fraction < 0 || f.mode.fraction > 1) throw Error(Errc::InvalidScenario, "fraction outside [0, 1]");
  }
  for (const auto& e : s.events) {
    for (const auto& a : e.atoms) {
      if (!a.is_ground()) throw Error(Errc::InvalidScenario, "event atom " + to_string(a) + " is not ground");
      validate_formula(s.ontology, Formula::of(a));
    }
  }
  for (const auto& c : s.cancellations) {
    if (c.task >= s.tasks.size()) throw Error(Errc::InvalidScenario, "cancellation of unknown task");
  }
  for (const auto& w : s.withdrawals) {
    if (!ids.count(w.provider)) throw Error(Errc::UnknownProvider, "withdrawal of " + w.provider);
  }
  if (s.config.max_ticks <= 0 || s.config.timeout_ticks <= 0 || s.config.response_bound <= 0 ||
      s.config.jitter < 0) {
    throw Error(Errc::InvalidScenario, "config values must be positive");
  }
}

Simulation::Simulation(Scenario scenario)
    : scenario_(std::move(scenario)),
      world_(scenario_.map),
      repository_(scenario_.map),
      tm_(*this, tm_config(scenario_.config)),
      rng_(scenario_.config.seed) {
  validate_scenario(scenario_);
  for (const auto& p : scenario_.providers) {
    registry_.publish(scenario_.ontology, world_, p, 0);
    Actor a;
    a.provider = p;
    actors_.emplace(p.id, std::move(a));
  }
  for (const auto& sg : scenario_.safeguards) store_.add(scenario_.ontology, sg, registry_);
}

void Simulation::emit(const std::string& actor, const std::string& event, std::uint64_t txn, std::size_t step,
                      nlohmann::json payload) {
  TraceRecord r;
  r.tick = clock_;
  r.txn = txn;
  r.step = step;
  r.actor = actor;
  r.event = event;
  r.payload = std::move(payload);
  trace_.push_back(std::move(r));
}

void Simulation::trace(TraceRecord r) {
  if (r.event == "phase" && r.state_before == "Queued") {
    const auto& t = tm_.transactions();
    auto it = t.find(r.txn);
    if (it != t.end() && it->second.kind == TxnKind::Main) start_maps_[r.txn] = world_;
  }
  trace_.push_back(std::move(r));
}

AtomDiff Simulation::apply(const std::vector<Atom>& atoms, const std::string& cause) {
  auto d = apply_atoms(world_, atoms);
  if (!d.empty()) emit(cause, "world-change", cause_.first, cause_.second, {{"diff", diff_json(d)}});
  return d;
}

void Simulation::send(Message m) {
  auto it = actors_.find(m.to);
  if (it == actors_.end()) {
    emit(m.from, "undeliverable", m.txn, m.step, {{"to", m.to}, {"message", message_name(m.kind)}});
    return;
  }
  it->second.inbox.push_back(std::move(m));
}

std::optional<IntentionReply> Simulation::ask(const std::string& provider, const Intention& intention) {
  auto it = actors_.find(provider);
  if (it == actors_.end() || it->second.dead) {
    emit(provider, "intention-unanswered", 0, 0, {{"service", intention.service_type}});
    return std::nullopt;
  }
  Actor& a = it->second;
  auto reply = handle_intention(scenario_.ontology, a.provider, intention, world_, clock_, a.running.size());
  nlohmann::json p{{"service", intention.service_type}, {"task", to_string(intention.task)}};
  if (const auto* c = std::get_if<Commitment>(&reply)) {
    p["commitment"] = {{"cost", c->cost}, {"duration", c->duration}, {"expiry", c->expiry}};
    emit(provider, "commit", 0, 0, p);
  } else {
    const auto& r = std::get<Refusal>(reply);
    p["refusal"] = reason_name(r.reason);
    p["detail"] = r.detail;
    emit(provider, "refuse", 0, 0, p);
  }
  return reply;
}

void Simulation::scripted() {
  for (const auto& e : scenario_.events) {
    if (e.tick == clock_) apply(e.atoms, "environment");
  }
  for (const auto& w : scenario_.withdrawals) {
    if (w.tick != clock_) continue;
    registry_.unregister_provider(w.provider);
    emit(w.provider, "withdrawn", 0, 0, nlohmann::json::object());
  }
  for (std::size_t i = 0; i < scenario_.tasks.size(); ++i) {
    if (scenario_.tasks[i].submit_at == clock_) task_txn_[i] = tm_.submit(scenario_.tasks[i].task, i);
  }
  for (const auto& c : scenario_.cancellations) {
    if (c.tick != clock_) continue;
    auto it = task_txn_.find(c.task);
    try {
      if (it == task_txn_.end()) throw Error(Errc::UnknownTransaction, "task " + std::to_string(c.task));
      tm_.cancel(it->second);
    } catch (const Error& e) {
      emit("environment", "cancel-rejected", it == task_txn_.end() ? 0 : it->second, 0, {{"error", e.what()}});
    }
  }
  for (auto& [id, a] : actors_) {
    for (const auto& f : scenario_.failures) {
      if (f.provider == id && f.at_tick == clock_) a.pending.push_back(f);
    }
  }
}

void Simulation::provider_inbox(Actor& a) {
  if (a.inbox.empty()) return;
  Message m = std::move(a.inbox.front());
  a.inbox.pop_front();
  const auto& id = a.provider.id;
  if (a.dead) {
    emit(id, "ignored", m.txn, m.step, {{"message", message_name(m.kind)}});
    return;
  }
  if (m.kind == MessageKind::Invoke) {
    if (clock_ > m.commitment.expiry) {
      Message f;
      f.kind = MessageKind::Fault;
      f.from = id;
      f.to = m.from;
      f.txn = m.txn;
      f.step = m.step;
      f.sent_at = clock_;
      f.described = true;
      f.description = "commitment expired";
      tm_inbox_.push_back(std::move(f));
      emit(id, "expired", m.txn, m.step, nlohmann::json::object());
      return;
    }
    ++a.invocations;
    Commitment c = m.commitment;
    if (scenario_.config.jitter > 0) {
      std::uniform_int_distribution<std::int64_t> d(0, scenario_.config.jitter);
      c.duration += d(rng_);
    }
    Running r{m.txn, m.step, Execution(c, m.service_kind, m.active_marker, m.probes), 0};
    for (const auto& f : scenario_.failures) {
      if (f.provider == id && f.ordinal == a.invocations) r.exec.arm(f.mode, f.after_ticks);
    }
    if (!a.pending.empty()) {
      r.exec.arm(a.pending.front().mode, 0);
      a.pending.erase(a.pending.begin());
    }
    emit(id, "invoked", m.txn, m.step, {{"service", c.service_type}, {"duration", c.duration}});
    a.running.push_back(std::move(r));
    return;
  }
  if (m.kind == MessageKind::Cancel) {
    auto it = std::find_if(a.running.begin(), a.running.end(),
                           [&](const Running& r) { return r.txn == m.txn && r.step == m.step; });
    if (it == a.running.end()) {
      emit(id, "cancel-ignored", m.txn, m.step, nlohmann::json::object());
      return;
    }
    cause_ = {m.txn, m.step};
    const auto ev = it->exec.cancel(*this);
    cause_ = {0, 0};
    Message out;
    out.kind = MessageKind::Canceled;
    out.from = id;
    out.to = m.from;
    out.txn = m.txn;
    out.step = m.step;
    out.sent_at = clock_;
    out.diff = fresh_changes(*it);
    out.net = ev.diff;
    tm_inbox_.push_back(std::move(out));
    a.running.erase(it);
    return;
  }
  emit(id, "ignored", m.txn, m.step, {{"message", message_name(m.kind)}});
}

AtomDiff Simulation::fresh_changes(Running& r) const {
  const auto& all = r.exec.changes();
  AtomDiff out(all.begin() + static_cast<std::ptrdiff_t>(r.reported), all.end());
  r.reported = all.size();
  return out;
}

void Simulation::advance_executions(Actor& a) {
  const auto& id = a.provider.id;
  if (!a.pending.empty() && !a.running.empty()) {
    a.running.front().exec.arm(a.pending.front().mode, a.running.front().exec.elapsed());
    a.pending.erase(a.pending.begin());
  }
  std::vector<Running> keep;
  for (auto& r : a.running) {
    cause_ = {r.txn, r.step};
    if (a.dead) {
      r.exec.cancel(*this);
      continue;
    }
    const auto ev = r.exec.tick(*this);
    Message m;
    m.from = id;
    m.to = "tm";
    m.txn = r.txn;
    m.step = r.step;
    m.sent_at = clock_;
    m.diff = fresh_changes(r);
    if (const auto* p = std::get_if<ExecProgress>(&ev)) {
      m.kind = MessageKind::Progress;
      m.percent = p->percent;
    } else if (const auto* c = std::get_if<ExecCompleted>(&ev)) {
      m.kind = MessageKind::Completed;
      m.net = c->diff;
      m.report = c->report;
    } else if (const auto* f = std::get_if<ExecFault>(&ev)) {
      m.kind = MessageKind::Fault;
      m.net = f->diff;
      m.observed = f->observed;
      m.description = f->description;
      m.described = true;
    } else {
      a.dead = true;
      emit(id, "silent", r.txn, r.step, nlohmann::json::object());
      continue;
    }
    nlohmann::json p{{"diff", diff_json(m.diff)}};
    if (m.kind == MessageKind::Progress) p["percent"] = m.percent;
    if (m.kind == MessageKind::Fault) p["description"] = m.description;
    emit(id, message_name(m.kind), r.txn, r.step, p);
    tm_inbox_.push_back(std::move(m));
    if (!r.exec.finished()) keep.push_back(std::move(r));
  }
  cause_ = {0, 0};
  a.running = std::move(keep);

  std::vector<Running> local;
  for (auto& r : a.local) {
    const auto ev = r.exec.tick(*this);
    if (const auto* c = std::get_if<ExecCompleted>(&ev)) {
      Message m;
      m.kind = MessageKind::Completed;
      m.from = id;
      m.to = "tm";
      m.sent_at = clock_;
      m.diff = fresh_changes(r);
      m.net = c->diff;
      emit(id, "local-action-done", 0, 0, {{"diff", diff_json(c->diff)}});
      tm_inbox_.push_back(std::move(m));
    } else if (std::holds_alternative<ExecFault>(ev)) {
      emit(id, "local-action-failed", 0, 0, nlohmann::json::object());
    }
    if (!r.exec.finished()) local.push_back(std::move(r));
  }
  a.local = std::move(local);
}

void Simulation::monitor(Actor& a) {
  // Keys whose situation is over may be reported again later.
  for (auto it = a.notified.begin(); it != a.notified.end();) {
    const auto& sg = store_.get(it->first);
    if (evaluate(substitute(sg.critical, it->second), world_)) {
      ++it;
    } else {
      it = a.notified.erase(it);
    }
  }
  if (a.dead || a.running.empty() || store_.empty()) return;
  for (const auto& n : monitor_local(scenario_.ontology, a.provider, store_, world_)) {
    if (!a.notified.insert({n.safeguard_id, n.binding}).second) continue;
    Message m;
    m.kind = MessageKind::CriticalNotice;
    m.from = a.provider.id;
    m.to = "tm";
    m.sent_at = clock_;
    m.notice = n;
    emit(a.provider.id, "critical-notice", 0, 0,
         {{"safeguard", n.safeguard_id}, {"binding", to_string(n.binding)}, {"self_resolving", n.self_resolving}});
    tm_inbox_.push_back(std::move(m));
    if (!n.self_resolving || !n.local_action) continue;
    const auto* d = offered(a.provider, n.local_service);
    Commitment c;
    c.provider = a.provider.id;
    c.service_type = n.local_service;
    c.task = *n.local_action;
    c.duration = d ? a.provider.duration(*d) : 1;
    c.expiry = clock_ + c.duration + 1;
    c.region = region_of(scenario_.ontology, c.task);
    a.local.push_back(Running{0, 0, Execution(c, d ? d->kind : ServiceKind::Physical, d ? d->active_marker : ""), 0});
  }
}

void Simulation::sample_safety() {
  std::set<std::pair<std::string, Binding>> critical;
  for (const auto& sg : scenario_.safeguards) {
    for (const auto& b : satisfying_bindings(sg.critical, world_)) {
      critical.insert({sg.id, b});
      seen_.insert({sg.id, b});
    }
  }
  std::set<std::pair<std::string, Binding>> safe;
  for (const auto& key : seen_) {
    const auto& sg = store_.get(key.first);
    for (const auto& psi : sg.safe_alternatives) {
      if (evaluate(substitute(psi, key.second), world_)) {
        safe.insert(key);
        break;
      }
    }
  }
  critical_.push_back(std::move(critical));
  safe_.push_back(std::move(safe));
}

void Simulation::tick_once() {
  scripted();
  for (auto& [id, a] : actors_) provider_inbox(a);
  for (auto& [id, a] : actors_) advance_executions(a);
  for (auto& [id, a] : actors_) monitor(a);
  const auto activations = store_.check(scenario_.ontology, world_, clock_);
  sample_safety();
  while (!tm_inbox_.empty()) {
    Message m = std::move(tm_inbox_.front());
    tm_inbox_.pop_front();
    tm_.deliver(m);
  }
  for (const auto& act : activations) {
    emit("environment", "critical-situation", 0, 0,
         {{"safeguard", act.safeguard_id}, {"binding", to_string(act.binding)}, {"activation", act.id}});
    tm_.on_activation(act);
  }
  tm_.step();
  ++clock_;
}

bool Simulation::settled() const {
  std::int64_t last = 0;
  for (const auto& t : scenario_.tasks) last = std::max(last, t.submit_at);
  for (const auto& e : scenario_.events) last = std::max(last, e.tick);
  for (const auto& c : scenario_.cancellations) last = std::max(last, c.tick);
  for (const auto& w : scenario_.withdrawals) last = std::max(last, w.tick);
  if (clock_ <= last) return false;
  if (!tm_.idle() || !tm_inbox_.empty()) return false;
  for (const auto& [id, a] : actors_) {
    if (!a.running.empty() || !a.local.empty() || !a.inbox.empty()) return false;
  }
  return true;
}

RunResult Simulation::run() {
  while (!settled()) {
    if (clock_ >= scenario_.config.max_ticks) {
      horizon_ = true;
      emit("environment", "horizon-exceeded", 0, 0, {{"max_ticks", scenario_.config.max_ticks}});
      tm_.abandon_all("horizon exceeded");
      break;
    }
    tick_once();
  }
  return result();
}

RunResult Simulation::result() const {
  RunResult r;
  r.ticks = clock_;
  r.horizon_exceeded = horizon_;
  r.trace = trace_;
  r.protocol_violations = tm_.protocol_violations();
  r.activations = store_.activations().size();
  r.final_map = world_;
  r.start_maps = start_maps_;
  for (std::size_t i = 0; i < scenario_.tasks.size(); ++i) {
    TaskResult tr;
    tr.index = i;
    tr.effect_holds = evaluate(scenario_.tasks[i].task.effect, world_);
    auto it = task_txn_.find(i);
    if (it != task_txn_.end()) {
      const auto& t = tm_.transaction(it->second);
      tr.txn = t.id;
      tr.outcome = t.outcome;
      tr.submitted_at = t.submitted_at;
      tr.ended_at = t.ended_at;
      tr.replans = t.replans;
      tr.reason = t.note;
    }
    r.tasks.push_back(std::move(tr));
  }

  // Every tick a binding is critical, within the bound either a safe
  // alternative holds or the answerable transaction has ended.
  const auto bound = scenario_.config.response_bound;
  const auto n = static_cast<std::int64_t>(critical_.size());
  std::map<std::pair<std::string, Binding>, std::vector<const SafeguardActivation*>> acts;
  for (const auto& [aid, a] : store_.activations()) acts[{a.safeguard_id, a.binding}].push_back(&a);
  for (std::int64_t t = 0; t < n; ++t) {
    for (const auto& key : critical_[static_cast<std::size_t>(t)]) {
      bool ok = false;
      for (std::int64_t u = t; u <= std::min(n - 1, t + bound) && !ok; ++u) {
        ok = safe_[static_cast<std::size_t>(u)].count(key) != 0;
      }
      for (const auto* a : acts[key]) {
        if (ok || a->detected_at > t) continue;
        const auto ended = tm_.resolution_ended(a->id);
        ok = ended && *ended <= t + bound;
      }
      if (!ok) r.safety_violations.push_back({key.first, key.second, t});
    }
  }
  return r;
}

}  // namespace hrc
