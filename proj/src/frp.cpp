#include "hrc/frp.hpp"

namespace hrc {

const char* state_name(StepState s) {
  switch (s) {
    case StepState::Arranged: return "Arranged";
    case StepState::Invoked: return "Invoked";
    case StepState::Active: return "Active";
    case StepState::Completing: return "Completing";
    case StepState::Completed: return "Completed";
    case StepState::Canceling: return "Canceling";
    case StepState::Canceled: return "Canceled";
    case StepState::Faulted: return "Faulted";
    case StepState::Compensating: return "Compensating";
    case StepState::Compensated: return "Compensated";
    case StepState::CompensationFailed: return "CompensationFailed";
    case StepState::Abandoned: return "Abandoned";
  }
  return "?";
}

const char* event_name(StepEvent e) {
  switch (e) {
    case StepEvent::Invoke: return "Invoke";
    case StepEvent::Progress: return "Progress";
    case StepEvent::Completed: return "Completed";
    case StepEvent::Acknowledge: return "Acknowledge";
    case StepEvent::Fault: return "Fault";
    case StepEvent::Timeout: return "Timeout";
    case StepEvent::Cancel: return "Cancel";
    case StepEvent::Canceled: return "Canceled";
    case StepEvent::Compensate: return "Compensate";
    case StepEvent::Compensated: return "Compensated";
    case StepEvent::CompensationFailed: return "CompensationFailed";
    case StepEvent::Abort: return "Abort";
  }
  return "?";
}

bool is_terminal(StepState s) {
  switch (s) {
    case StepState::Completed:
    case StepState::Canceled:
    case StepState::Faulted:
    case StepState::Compensated:
    case StepState::CompensationFailed:
    case StepState::Abandoned:
      return true;
    default:
      return false;
  }
}

bool is_busy(StepState s) {
  switch (s) {
    case StepState::Invoked:
    case StepState::Active:
    case StepState::Completing:
    case StepState::Canceling:
    case StepState::Compensating:
      return true;
    default:
      return false;
  }
}

std::optional<StepState> transition(StepState s, StepEvent e) {
  using S = StepState;
  using E = StepEvent;
  if (e == E::Abort) {
    if (is_terminal(s)) return std::nullopt;
    return S::Abandoned;
  }
  switch (s) {
    case S::Arranged:
      if (e == E::Invoke) return S::Invoked;
      break;
    case S::Invoked:
    case S::Active:
      switch (e) {
        case E::Progress: return S::Active;
        case E::Completed: return S::Completing;
        case E::Fault:
        case E::Timeout: return S::Faulted;
        case E::Cancel: return S::Canceling;
        default: break;
      }
      break;
    case S::Completing:
      if (e == E::Acknowledge) return S::Completed;
      break;
    case S::Canceling:
      switch (e) {
        case E::Canceled: return S::Canceled;
        // Sent before the cancel reached the provider.
        case E::Progress: return S::Canceling;
        // The provider finished before the cancel reached it.
        case E::Completed: return S::Completing;
        case E::Fault:
        case E::Timeout: return S::Canceled;
        default: break;
      }
      break;
    case S::Faulted:
    case S::Completed:
      if (e == E::Compensate) return S::Compensating;
      break;
    case S::Compensating:
      if (e == E::Compensated) return S::Compensated;
      if (e == E::CompensationFailed) return S::CompensationFailed;
      break;
    default:
      break;
  }
  return std::nullopt;
}

const char* outcome_name(Outcome o) {
  switch (o) {
    case Outcome::Completed: return "Completed";
    case Outcome::Unable: return "Unable";
    case Outcome::Canceled: return "Canceled";
  }
  return "?";
}

const char* kind_name(TxnKind k) {
  switch (k) {
    case TxnKind::Main: return "main";
    case TxnKind::Compensation: return "compensation";
    case TxnKind::Safeguard: return "safeguard";
  }
  return "?";
}

const char* message_name(MessageKind k) {
  switch (k) {
    case MessageKind::Invoke: return "Invoke";
    case MessageKind::Cancel: return "Cancel";
    case MessageKind::Progress: return "Progress";
    case MessageKind::Completed: return "Completed";
    case MessageKind::Canceled: return "Canceled";
    case MessageKind::Fault: return "Fault";
    case MessageKind::CriticalNotice: return "CriticalNotice";
  }
  return "?";
}

const char* phase_name(Phase p) {
  switch (p) {
    case Phase::Queued: return "Queued";
    case Phase::Planning: return "Planning";
    case Phase::Executing: return "Executing";
    case Phase::Recovering: return "Recovering";
    case Phase::Paused: return "Paused";
    case Phase::WindingDown: return "WindingDown";
    case Phase::Terminal: return "Terminal";
  }
  return "?";
}

nlohmann::json TraceRecord::to_json() const {
  return nlohmann::json{{"tick", tick},           {"txn", txn},       {"step", step},
                        {"actor", actor},         {"event", event},   {"state_before", state_before},
                        {"state_after", state_after}, {"payload", payload}};
}

}  // namespace hrc
