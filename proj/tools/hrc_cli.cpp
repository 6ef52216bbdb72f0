// hrc: validate, plan and run scenario files.

#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "hrc/error.hpp"
#include "hrc/planner.hpp"
#include "hrc/scenario.hpp"
#include "hrc/simulation.hpp"

namespace {

using nlohmann::json;

// Exit codes: 0 fine, 1 negative result, 2 unusable input.
constexpr int kBadInput = 2;

std::optional<hrc::Scenario> load(const std::string& path, bool report) {
  json doc;
  try {
    doc = hrc::read_json_file(path);
  } catch (const hrc::Error& e) {
    std::cerr << e.what() << "\n";
    return std::nullopt;
  }
  auto r = hrc::load_scenario(doc);
  if (!r.scenario && report) {
    for (const auto& i : r.issues) std::cerr << (i.pointer.empty() ? "/" : i.pointer) << ": " << i.message << "\n";
  }
  return std::move(r.scenario);
}

int cmd_validate(const std::string& path) {
  json doc;
  try {
    doc = hrc::read_json_file(path);
  } catch (const hrc::Error& e) {
    std::cerr << e.what() << "\n";
    return kBadInput;
  }
  const auto r = hrc::load_scenario(doc);
  for (const auto& i : r.issues) std::cout << (i.pointer.empty() ? "/" : i.pointer) << ": " << i.message << "\n";
  if (!r.issues.empty()) {
    std::cout << r.issues.size() << " violation(s)\n";
    return 1;
  }
  std::cout << "ok: " << r.scenario->tasks.size() << " task(s), " << r.scenario->providers.size()
            << " provider(s), " << r.scenario->safeguards.size() << " safeguard(s)\n";
  return 0;
}

int cmd_plan(const std::string& path, long index, bool as_json) {
  auto s = load(path, true);
  if (!s) return kBadInput;
  if (index < 0 || static_cast<std::size_t>(index) >= s->tasks.size()) {
    std::cerr << "no task " << index << " (scenario has " << s->tasks.size() << ")\n";
    return kBadInput;
  }
  hrc::Registry registry;
  for (const auto& p : s->providers) registry.publish(s->ontology, s->map, p, 0);
  hrc::SafeguardStore store;
  for (const auto& g : s->safeguards) store.add(s->ontology, g, registry);
  hrc::PlannerOptions opt;
  opt.node_budget = s->config.search_budget;
  hrc::PlanResult res;
  try {
    res = hrc::plan(s->ontology, s->tasks[static_cast<std::size_t>(index)].task, registry, s->map, &store, opt);
  } catch (const hrc::Error& e) {
    std::cout << "Unsolvable: " << e.what() << "\n";
    return 1;
  }
  if (const auto* u = std::get_if<hrc::Unsolvable>(&res)) {
    if (as_json) {
      std::cout << json{{"unsolvable", u->reason}, {"expanded", u->expanded}, {"pruned_critical", u->pruned_critical}}
                       .dump(2)
                << "\n";
    } else {
      std::cout << "Unsolvable: " << u->reason << " (expanded " << u->expanded << ", pruned " << u->pruned_critical
                << ")\n";
    }
    return 1;
  }
  const auto& p = std::get<hrc::AbstractPlan>(res);
  if (as_json) {
    json steps = json::array();
    for (const auto id : p.topological()) {
      const auto& st = p.step(id);
      steps.push_back({{"id", id}, {"service", st.service_type}, {"task", hrc::to_string(st.task)}});
    }
    json order = json::array();
    for (const auto& [a, b] : p.order) order.push_back({a, b});
    json links = json::array();
    for (const auto& l : p.causal_links) {
      links.push_back({{"producer", l.producer}, {"atom", hrc::to_string(l.atom)}, {"consumer", l.consumer}});
    }
    std::cout << json{{"steps", steps}, {"order", order}, {"causal_links", links}}.dump(2) << "\n";
    return 0;
  }
  if (p.empty()) {
    std::cout << "empty plan: the effect already holds\n";
    return 0;
  }
  std::cout << "steps:\n";
  for (const auto id : p.topological()) {
    const auto& st = p.step(id);
    std::cout << "  " << id << ". " << st.service_type << " " << hrc::to_string(st.task) << "\n";
  }
  std::cout << "order:\n";
  for (const auto& [a, b] : p.order) std::cout << "  " << a << " < " << b << "\n";
  std::cout << "causal links:\n";
  for (const auto& l : p.causal_links) {
    std::cout << "  " << l.producer << " -> " << l.consumer << " : " << hrc::to_string(l.atom) << "\n";
  }
  return 0;
}

json verdict(const hrc::Scenario& s, const hrc::RunResult& r) {
  std::size_t resolved = 0;
  std::size_t unresolvable = 0;
  std::size_t local = 0;
  for (const auto& t : r.trace) {
    if (t.event == "safeguard-resolved") ++resolved;
    if (t.event == "safeguard-unresolvable") ++unresolvable;
    if (t.event == "safeguard-local") ++local;
  }
  json tasks = json::array();
  for (const auto& t : r.tasks) {
    json j{{"index", t.index},
           {"outcome", t.outcome ? hrc::outcome_name(*t.outcome) : "NotSubmitted"},
           {"ticks", t.ended_at >= 0 ? t.ended_at - t.submitted_at : -1},
           {"replans", t.replans},
           {"reason", t.reason}};
    tasks.push_back(j);
  }
  return json{{"scenario", s.name},
              {"seed", s.config.seed},
              {"ticks", r.ticks},
              {"horizon_exceeded", r.horizon_exceeded},
              {"tasks", tasks},
              {"safeguards",
               {{"activations", r.activations},
                {"resolved", resolved},
                {"unresolvable", unresolvable},
                {"handled_locally", local},
                {"response_violations", r.safety_violations.size()}}},
              {"protocol_violations", r.protocol_violations}};
}

int cmd_run(const std::string& path, std::optional<std::uint64_t> seed, std::optional<std::int64_t> max_ticks,
            const std::string& trace_path, bool json_verdict) {
  auto s = load(path, true);
  if (!s) return kBadInput;
  if (seed) s->config.seed = *seed;
  if (max_ticks) {
    if (*max_ticks <= 0) {
      std::cerr << "--max-ticks must be positive\n";
      return kBadInput;
    }
    s->config.max_ticks = *max_ticks;
  }
  hrc::RunResult r;
  try {
    hrc::Simulation sim(*s);
    r = sim.run();
  } catch (const hrc::Error& e) {
    std::cerr << e.what() << "\n";
    return kBadInput;
  }
  if (!trace_path.empty()) {
    std::ofstream out(trace_path, std::ios::binary);
    if (!out) {
      std::cerr << "cannot write " << trace_path << "\n";
      return kBadInput;
    }
    for (const auto& t : r.trace) out << t.to_json().dump() << "\n";
  }
  const auto v = verdict(*s, r);
  if (json_verdict) {
    std::cout << v.dump(2) << "\n";
  } else {
    for (const auto& t : v["tasks"]) {
      std::cout << "task " << t["index"].get<std::size_t>() << ": " << t["outcome"].get<std::string>() << " after "
                << t["ticks"].get<std::int64_t>() << " ticks, " << t["replans"].get<std::size_t>() << " replan(s)";
      const auto reason = t["reason"].get<std::string>();
      if (!reason.empty()) std::cout << " (" << reason << ")";
      std::cout << "\n";
    }
    std::cout << "safeguard activations: " << r.activations << ", response violations: " << r.safety_violations.size()
              << "\n";
    if (r.horizon_exceeded) std::cout << "horizon of " << s->config.max_ticks << " ticks exceeded\n";
  }
  bool all = true;
  for (const auto& t : r.tasks) all = all && t.outcome == hrc::Outcome::Completed;
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Task realization with failure recovery for human-robot collaboration"};
  app.require_subcommand(1);

  std::string path;
  auto* validate = app.add_subcommand("validate", "Check a scenario file");
  validate->add_option("scenario", path, "Scenario JSON file")->required();

  long index = 0;
  bool plan_json = false;
  auto* plan = app.add_subcommand("plan", "Print the abstract plan for one task without executing it");
  plan->add_option("scenario", path, "Scenario JSON file")->required();
  plan->add_option("task", index, "Task index (0-based)")->required();
  plan->add_flag("--json", plan_json, "Print the plan as JSON");

  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> max_ticks;
  std::string trace_path;
  bool json_verdict = false;
  auto* run = app.add_subcommand("run", "Simulate the scenario and report outcomes");
  run->add_option("scenario", path, "Scenario JSON file")->required();
  run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--max-ticks", max_ticks, "Override the horizon");
  run->add_option("--trace", trace_path, "Write the event trace (JSON lines) here");
  run->add_flag("--json-verdict", json_verdict, "Print the verdict as one JSON document");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kBadInput;
  }
  if (*validate) return cmd_validate(path);
  if (*plan) return cmd_plan(path, index, plan_json);
  return cmd_run(path, seed, max_ticks, trace_path, json_verdict);
}
