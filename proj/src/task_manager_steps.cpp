#include <algorithm>

#include "hrc/error.hpp"
#include "hrc/evaluate.hpp"
#include "hrc/frp.hpp"

namespace hrc {

namespace {

bool executed_any(const Transaction& t) {
  return std::any_of(t.steps.begin(), t.steps.end(),
                     [](const auto& kv) { return !kv.second.diagnostic && kv.second.invoked_at >= 0; });
}

nlohmann::json plan_json(const Workflow& w) {
  auto steps = nlohmann::json::array();
  for (const auto& s : w.plan.steps) {
    const auto& c = w.assignments.at(s.id);
    steps.push_back({{"id", s.id}, {"service", s.service_type}, {"provider", c.provider}, {"task", to_string(s.task)},
                     {"cost", c.cost}});
  }
  auto order = nlohmann::json::array();
  for (const auto& [a, b] : w.plan.order) order.push_back({a, b});
  return {{"steps", steps}, {"order", order}};
}

std::vector<Atom> extensional(const std::vector<Atom>& atoms) {
  std::vector<Atom> out;
  for (const auto& a : atoms) {
    if (!is_computed_relation(a.relation)) out.push_back(a);
  }
  return out;
}

}  // namespace

void TaskManager::step() {
  if (active_main_ && txn(*active_main_).terminal()) active_main_.reset();
  while (!active_main_ && !queue_.empty()) {
    const auto id = queue_.front();
    queue_.pop_front();
    Transaction& t = txn(id);
    if (t.terminal()) continue;
    start(t);
    active_main_ = id;
  }
  // Safeguard work goes first; everything else in creation order.
  for (int round = 0; round < 64; ++round) {
    std::vector<std::uint64_t> ids;
    for (const auto& [id, t] : txns_) {
      if (t.kind == TxnKind::Safeguard && !t.terminal() && t.phase != Phase::Queued) ids.push_back(id);
    }
    for (const auto& [id, t] : txns_) {
      if (t.kind != TxnKind::Safeguard && !t.terminal() && t.phase != Phase::Queued) ids.push_back(id);
    }
    bool progress = false;
    for (const auto id : ids) {
      Transaction& t = txn(id);
      if (!t.terminal() && advance(t)) progress = true;
    }
    if (!progress) break;
  }
}

bool TaskManager::advance(Transaction& t) {
  check_timeouts(t);
  if (t.terminal()) return false;
  if (t.child && !txn(*t.child).terminal()) return false;
  switch (t.phase) {
    case Phase::Planning: return advance_planning(t);
    case Phase::Executing: return advance_executing(t);
    case Phase::Recovering: return advance_recovering(t);
    case Phase::Paused: return advance_paused(t);
    case Phase::WindingDown: return advance_winding(t);
    default: return false;
  }
}

bool TaskManager::advance_planning(Transaction& t) {
  if (busy(t)) return false;
  // Cancellations in the region land first; their diffs change what is left to do.
  if (t.kind == TxnKind::Safeguard && t.activation) {
    const auto it = resolutions_.find(*t.activation);
    if (it != resolutions_.end() && it->second.enclosing) {
      const auto& steps = txn(*it->second.enclosing).steps;
      if (std::any_of(steps.begin(), steps.end(),
                      [](const auto& kv) { return kv.second.state == StepState::Canceling; })) {
        return false;
      }
    }
  }
  const auto& onto = host_.ontology();
  const auto& repo = host_.repository().map();
  PlannerOptions opt;
  opt.node_budget = config_.search_budget;
  opt.prune_critical = t.kind != TxnKind::Safeguard;
  opt.excluded_providers = t.excluded;
  PlanResult res;
  try {
    if (t.generation == 0 && t.replans == 0) {
      res = plan(onto, t.task, host_.registry(), repo, &host_.safeguards(), opt);
    } else {
      res = replan(onto, t.task, repo, t.excluded, host_.registry(), &host_.safeguards(), opt);
    }
  } catch (const Error& e) {
    if (e.code() != Errc::SearchBudgetExceeded) throw;
    res = Unsolvable{"search budget exceeded", config_.search_budget, 0, 0, 0};
  }
  if (const auto* u = std::get_if<Unsolvable>(&res)) {
    log(&t, 0, "unsolvable", phase_name(t.phase), phase_name(t.phase),
        {{"reason", u->reason}, {"expanded", u->expanded}, {"pruned_critical", u->pruned_critical}});
    if (executed_any(t) && t.kind == TxnKind::Main) {
      wind_down(t, Outcome::Unable, "no plan: " + u->reason);
    } else {
      finish(t, Outcome::Unable, "no plan: " + u->reason);
    }
    return true;
  }
  const auto& p = std::get<AbstractPlan>(res);
  if (p.empty()) {
    if (evaluate(t.task.effect, host_.authoritative())) {
      finish(t, Outcome::Completed, "effect holds");
    } else {
      log(&t, 0, "effect-not-verified", phase_name(t.phase), phase_name(t.phase));
      t.stale_effect = true;
      t.recover = RecoverStage::Diagnose;
      set_phase(t, Phase::Recovering, "repository is stale");
    }
    return true;
  }
  IntentionChannel channel = [this](const std::string& provider, const Intention& in) {
    return host_.ask(provider, in);
  };
  auto arranged = arrange(onto, p, host_.registry(), repo, channel, t.excluded, config_.id);
  if (const auto* f = std::get_if<ArrangementFailure>(&arranged)) {
    log(&t, f->step, "arrangement-failed", phase_name(t.phase), phase_name(t.phase), {{"reason", f->reason}});
    if (executed_any(t) && t.kind == TxnKind::Main) {
      wind_down(t, Outcome::Unable, "arrangement failed: " + f->reason);
    } else {
      finish(t, Outcome::Unable, "arrangement failed: " + f->reason);
    }
    return true;
  }
  for (auto& [id, s] : t.steps) {
    if (s.state == StepState::Arranged) move(t, s, StepEvent::Abort, "superseded");
  }
  ++t.generation;
  t.workflow = std::get<Workflow>(std::move(arranged));
  t.current.clear();
  for (const auto& ps : t.workflow.plan.steps) {
    StepRecord s;
    s.id = t.next_step++;
    s.plan_step = ps.id;
    s.generation = t.generation;
    s.plan = ps;
    s.commitment = t.workflow.assignments.at(ps.id);
    s.compensation = t.workflow.compensations.at(ps.id);
    const auto id = s.id;
    t.current[ps.id] = id;
    log(&t, id, "committed", "", state_name(s.state),
        {{"provider", s.commitment.provider}, {"service", ps.service_type}, {"task", to_string(ps.task)}});
    t.steps.emplace(id, std::move(s));
  }
  log(&t, 0, t.generation == 1 ? "plan" : "replan", phase_name(t.phase), phase_name(Phase::Executing),
      plan_json(t.workflow));
  set_phase(t, Phase::Executing, "arranged");
  return true;
}

bool TaskManager::advance_executing(Transaction& t) {
  bool all_done = true;
  for (const auto& [pid, sid] : t.current) {
    const auto st = t.steps.at(sid).state;
    if (st != StepState::Completed) all_done = false;
    if (is_terminal(st) && st != StepState::Completed) {
      t.recover = RecoverStage::Wait;
      set_phase(t, Phase::Recovering, "step " + std::to_string(sid) + " ended " + state_name(st));
      return true;
    }
  }
  if (all_done) {
    if (evaluate(t.task.effect, host_.authoritative())) {
      finish(t, Outcome::Completed, "effect verified");
    } else {
      log(&t, 0, "effect-not-verified", phase_name(t.phase), phase_name(t.phase));
      t.stale_effect = true;
      t.recover = RecoverStage::Wait;
      set_phase(t, Phase::Recovering, "effect does not hold");
    }
    return true;
  }
  bool changed = false;
  for (const auto pid : t.workflow.plan.topological()) {
    StepRecord& s = t.steps.at(t.current.at(pid));
    if (s.state != StepState::Arranged) continue;
    const auto preds = t.workflow.plan.predecessors(pid);
    const bool ready = std::all_of(preds.begin(), preds.end(), [&](std::size_t q) {
      return t.steps.at(t.current.at(q)).state == StepState::Completed;
    });
    if (!ready) continue;
    const bool provider_free = std::none_of(t.steps.begin(), t.steps.end(), [&](const auto& kv) {
      return is_busy(kv.second.state) && kv.second.commitment.provider == s.commitment.provider;
    });
    if (!provider_free) continue;
    invoke(t, s);
    changed = true;
  }
  return changed;
}

bool TaskManager::start_diagnosis(Transaction& t, const std::set<std::string>& region,
                                  const std::vector<Atom>& probes) {
  for (const auto& e : host_.registry().entries()) {
    if (e.description.kind != ServiceKind::Cognitive) continue;
    if (t.excluded.count(e.provider) || !e.serves(region)) continue;
    Intention in{Task{}, config_.id, host_.now() + config_.timeout_ticks, e.description.type_name};
    const auto reply = host_.ask(e.provider, in);
    if (!reply) continue;
    const auto* c = std::get_if<Commitment>(&*reply);
    if (!c) continue;
    StepRecord s;
    s.id = t.next_step++;
    s.generation = t.generation;
    s.diagnostic = true;
    s.commitment = *c;
    s.commitment.region = region;
    s.service_kind = ServiceKind::Cognitive;
    s.probes = probes;
    s.plan.service_type = e.description.type_name;
    s.plan.region = region;
    const auto id = s.id;
    log(&t, id, "committed", "", state_name(s.state), {{"provider", c->provider}, {"service", c->service_type}});
    t.steps.emplace(id, std::move(s));
    t.diagnosis = id;
    invoke(t, t.steps.at(id));
    return true;
  }
  return false;
}

void TaskManager::assume_worst(Transaction& t, const StepRecord& s) {
  // A provider that kept talking has reported its changes already.
  if (!s.silent) {
    log(&t, s.id, "trust-reports", state_name(s.state), state_name(s.state));
    return;
  }
  std::vector<std::pair<Atom, bool>> facts;
  for (const auto& a : extensional(effect_atoms(s.plan.task.effect))) facts.emplace_back(a.positive(), a.negated);
  host_.repository().observe(host_.ontology(), facts, host_.now());
  log(&t, s.id, "assume-not-done", state_name(s.state), state_name(s.state));
}

std::optional<Task> TaskManager::compensation_for(const Transaction& t, const StepRecord& s) {
  std::string why;
  std::optional<Task> out;
  if (!s.compensation) {
    why = "effect not invertible";
  } else {
    AtomDiff delta;
    if (s.state == StepState::Faulted && !s.described) {
      const auto& now = host_.repository().map();
      for (const auto& a : extensional(effect_atoms(s.plan.task.effect))) {
        const auto p = a.positive();
        if (s.before.holds(p) != now.holds(p)) delta.push_back({p, now.holds(p)});
      }
    } else {
      for (const auto& c : s.actual) {
        if (c.atom.relation != s.plan.active_marker) delta.push_back(c);
      }
    }
    if (delta.empty()) {
      why = "nothing changed";
    } else {
      out = inverse_task(host_.ontology(), delta, s.before);
      if (!out) why = "effect not invertible";
    }
  }
  if (!out) log(&t, s.id, "no-compensation", state_name(s.state), state_name(s.state), {{"reason", why}});
  return out;
}

bool TaskManager::advance_recovering(Transaction& t) {
  switch (t.recover) {
    case RecoverStage::Wait:
      if (busy(t)) return false;
      t.recover = RecoverStage::Diagnose;
      return true;
    case RecoverStage::Diagnose: {
      if (t.faults.empty()) {
        if (t.stale_effect) {
          t.stale_effect = false;
          const auto atoms = extensional(effect_atoms(t.task.effect));
          std::vector<Atom> probes;
          for (const auto& a : atoms) probes.push_back(a.positive());
          if (!start_diagnosis(t, region_of(host_.ontology(), Task{Formula::truth(), t.task.effect}), probes)) {
            std::vector<std::pair<Atom, bool>> facts;
            for (const auto& a : atoms) facts.emplace_back(a.positive(), a.negated);
            host_.repository().observe(host_.ontology(), facts, host_.now());
            log(&t, 0, "assume-not-done", "", "");
            t.recover = RecoverStage::Replan;
          } else {
            t.recover = RecoverStage::AwaitDiagnosis;
          }
          return true;
        }
        t.recover = RecoverStage::Replan;
        return true;
      }
      StepRecord& f = t.steps.at(t.faults.front());
      if (f.described) {
        t.recover = RecoverStage::Compensate;
        return true;
      }
      std::vector<Atom> probes;
      for (const auto& a : extensional(effect_atoms(f.plan.task.effect))) probes.push_back(a.positive());
      for (const auto& a : extensional(all_atoms(f.plan.task.precondition))) probes.push_back(a.positive());
      auto region = f.plan.region;
      region.insert(f.commitment.region.begin(), f.commitment.region.end());
      if (start_diagnosis(t, region, probes)) {
        t.recover = RecoverStage::AwaitDiagnosis;
      } else {
        assume_worst(t, f);
        t.recover = RecoverStage::Compensate;
      }
      return true;
    }
    case RecoverStage::AwaitDiagnosis: {
      const StepRecord& d = t.steps.at(t.diagnosis);
      if (!is_terminal(d.state)) return false;
      if (d.state != StepState::Completed) {
        if (!t.faults.empty()) {
          assume_worst(t, t.steps.at(t.faults.front()));
        } else {
          std::vector<std::pair<Atom, bool>> facts;
          for (const auto& a : extensional(effect_atoms(t.task.effect))) facts.emplace_back(a.positive(), a.negated);
          host_.repository().observe(host_.ontology(), facts, host_.now());
        }
      }
      t.recover = t.faults.empty() ? RecoverStage::Replan : RecoverStage::Compensate;
      return true;
    }
    case RecoverStage::Compensate: {
      if (t.faults.empty()) {
        t.recover = RecoverStage::Replan;
        return true;
      }
      StepRecord& f = t.steps.at(t.faults.front());
      const auto comp = compensation_for(t, f);
      if (!comp) {
        t.faults.pop_front();
        t.recover = RecoverStage::Diagnose;
        return true;
      }
      move(t, f, StepEvent::Compensate);
      const auto id = open(TxnKind::Compensation, *comp, t.id, t.task_index);
      start(txn(id));
      t.child = id;
      t.child_for_step = f.id;
      t.recover = RecoverStage::AwaitCompensation;
      return true;
    }
    case RecoverStage::AwaitCompensation:
      return false;
    case RecoverStage::Replan:
      if (t.replans >= config_.max_replans) {
        if (t.kind == TxnKind::Main) {
          wind_down(t, Outcome::Unable, "replan limit reached");
        } else {
          finish(t, Outcome::Unable, "replan limit reached");
        }
        return true;
      }
      ++t.replans;
      t.recover = RecoverStage::Wait;
      set_phase(t, Phase::Planning, "replan " + std::to_string(t.replans));
      return true;
  }
  return false;
}

bool TaskManager::advance_paused(Transaction& t) {
  if (!t.resume && !t.abandon_after_pause) return false;
  if (busy(t)) return false;
  if (t.abandon_after_pause) {
    t.abandon_after_pause = false;
    wind_down(t, Outcome::Unable, "safeguard unresolvable");
    return true;
  }
  t.resume = false;
  t.paused_by.reset();
  t.recover = t.faults.empty() ? RecoverStage::Replan : RecoverStage::Wait;
  set_phase(t, Phase::Recovering, "safeguard resolved");
  return true;
}

bool TaskManager::advance_winding(Transaction& t) {
  switch (t.wind) {
    case WindStage::Cancel: {
      for (auto& [id, s] : t.steps) {
        if (s.state == StepState::Arranged) {
          move(t, s, StepEvent::Abort, t.note);
        } else if (s.state == StepState::Invoked || s.state == StepState::Active) {
          Message c;
          c.kind = MessageKind::Cancel;
          c.from = config_.id;
          c.to = s.commitment.provider;
          c.txn = t.id;
          c.step = s.id;
          c.sent_at = host_.now();
          move(t, s, StepEvent::Cancel, t.note);
          host_.send(std::move(c));
        }
      }
      if (busy(t)) return false;
      // Only main transactions undo their own work.
      if (t.kind == TxnKind::Main) {
        for (auto it = t.completion_order.rbegin(); it != t.completion_order.rend(); ++it) {
          if (t.steps.at(*it).state == StepState::Completed) t.to_compensate.push_back(*it);
        }
      }
      t.wind = WindStage::Compensate;
      return true;
    }
    case WindStage::Compensate: {
      if (t.to_compensate.empty()) {
        finish(t, t.target, t.note);
        return true;
      }
      StepRecord& s = t.steps.at(t.to_compensate.front());
      t.to_compensate.pop_front();
      const auto comp = compensation_for(t, s);
      if (!comp) return true;
      move(t, s, StepEvent::Compensate);
      const auto id = open(TxnKind::Compensation, *comp, t.id, t.task_index);
      start(txn(id));
      t.child = id;
      t.child_for_step = s.id;
      t.wind = WindStage::AwaitCompensation;
      return true;
    }
    case WindStage::AwaitCompensation:
      return false;
  }
  return false;
}

}  // namespace hrc
