#include "hrc/scenario.hpp"

#include <fstream>
#include <map>
#include <set>

#include "hrc/error.hpp"
#include "hrc/evaluate.hpp"

namespace hrc {

namespace {

using nlohmann::json;

std::string ptr(const std::string& base, const std::string& key) { return base + "/" + key; }
std::string ptr(const std::string& base, std::size_t i) { return base + "/" + std::to_string(i); }

[[noreturn]] void bad(const std::string& what) { throw Error(Errc::InvalidScenario, what); }

const json& field(const json& j, const char* key) {
  if (!j.is_object()) bad("expected an object");
  auto it = j.find(key);
  if (it == j.end()) bad(std::string("missing '") + key + "'");
  return *it;
}

std::string text(const json& j, const char* key) {
  const auto& v = field(j, key);
  if (!v.is_string()) bad(std::string("'") + key + "' must be a string");
  return v.get<std::string>();
}

std::string text_or(const json& j, const char* key, const std::string& fallback) {
  return j.contains(key) ? text(j, key) : fallback;
}

double number_or(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number()) bad(std::string("'") + key + "' must be a number");
  return v.get<double>();
}

std::int64_t integer_or(const json& j, const char* key, std::int64_t fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number_integer()) bad(std::string("'") + key + "' must be an integer");
  return v.get<std::int64_t>();
}

bool flag_or(const json& j, const char* key, bool fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_boolean()) bad(std::string("'") + key + "' must be true or false");
  return v.get<bool>();
}

const json& array_or_empty(const json& j, const char* key) {
  static const json empty = json::array();
  if (!j.is_object() || !j.contains(key)) return empty;
  const auto& v = j.at(key);
  if (!v.is_array()) bad(std::string("'") + key + "' must be an array");
  return v;
}

std::vector<std::string> strings(const json& j, const char* key) {
  std::vector<std::string> out;
  for (const auto& v : array_or_empty(j, key)) {
    if (!v.is_string()) bad(std::string("'") + key + "' must hold strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

Formula formula(const json& j, const char* key, const char* fallback = nullptr) {
  if (fallback && !j.contains(key)) return parse(fallback);
  return parse(text(j, key));
}

Literal literal(const json& v) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) return v.get<std::string>();
  bad("attribute value must be a number, string or boolean");
}

std::optional<Interval> interval(const json& j) {
  if (!j.contains("min") && !j.contains("max")) return std::nullopt;
  return Interval{number_or(j, "min", 0.0), number_or(j, "max", 0.0)};
}

AttributeDomain domain(const std::string& s) {
  if (s == "number") return AttributeDomain::Number;
  if (s == "enumeration") return AttributeDomain::Enumeration;
  if (s == "text") return AttributeDomain::Text;
  if (s == "boolean") return AttributeDomain::Boolean;
  bad("unknown attribute domain '" + s + "'");
}

ServiceKind service_kind(const std::string& s) {
  if (s == "physical") return ServiceKind::Physical;
  if (s == "cognitive") return ServiceKind::Cognitive;
  if (s == "software") return ServiceKind::Software;
  bad("unknown service kind '" + s + "'");
}

ProviderKind provider_kind(const std::string& s) {
  if (s == "device") return ProviderKind::Device;
  if (s == "human") return ProviderKind::Human;
  bad("unknown provider kind '" + s + "'");
}

FailureMode::Kind failure_kind(const std::string& s) {
  if (s == "fault") return FailureMode::Kind::FaultWithDescription;
  if (s == "silent") return FailureMode::Kind::SilentFailure;
  if (s == "partial") return FailureMode::Kind::PartialEffect;
  bad("unknown failure mode '" + s + "'");
}

std::vector<Parameter> parameters(const json& j, const char* key) {
  std::vector<Parameter> out;
  for (const auto& p : array_or_empty(j, key)) out.push_back({text(p, "name"), text(p, "type")});
  return out;
}

class Loader {
 public:
  explicit Loader(const json& doc) : doc_(doc) {}

  ScenarioLoad run();

 private:
  template <class F>
  void guarded(const std::string& pointer, F&& f) {
    try {
      f();
    } catch (const std::exception& e) {
      issues_.push_back({pointer, e.what()});
    }
  }

  void ontology();
  void map();
  void providers();
  void tasks();
  void safeguards();
  void schedule();
  void config();

  const json& doc_;
  Scenario s_;
  std::vector<ScenarioIssue> issues_;
  std::set<std::size_t> bad_providers_;
};

void Loader::ontology() {
  s_.ontology = builtin_ontology();
  if (!doc_.contains("ontology")) return;
  const auto& o = doc_.at("ontology");
  const std::string base = "/ontology";
  guarded(base, [&] {
    const auto& attrs = array_or_empty(o, "attributes");
    for (std::size_t i = 0; i < attrs.size(); ++i) {
      guarded(ptr(ptr(base, "attributes"), i), [&] {
        const auto& a = attrs[i];
        AttributeDef d{text(a, "name"), domain(text_or(a, "domain", "number")), text_or(a, "unit", ""), interval(a),
                       strings(a, "allowed")};
        s_.ontology.add_attribute(std::move(d));
      });
    }
    const auto& rels = array_or_empty(o, "relations");
    for (std::size_t i = 0; i < rels.size(); ++i) {
      guarded(ptr(ptr(base, "relations"), i), [&] {
        const auto& r = rels[i];
        RelationDef d;
        d.name = text(r, "name");
        d.arity = static_cast<std::size_t>(integer_or(r, "arity", 1));
        for (const auto& k : strings(r, "kinds")) {
          if (k != "object" && k != "attribute") bad("argument kind must be 'object' or 'attribute'");
          d.argument_kinds.push_back(k == "object" ? ArgumentKind::Object : ArgumentKind::Attribute);
        }
        if (d.argument_kinds.empty()) d.argument_kinds.assign(d.arity, ArgumentKind::Object);
        for (const auto& v : array_or_empty(r, "location_args")) {
          if (!v.is_number_unsigned()) bad("location_args must be argument positions");
          d.location_args.push_back(v.get<std::size_t>());
        }
        d.invertible = flag_or(r, "invertible", true);
        s_.ontology.add_relation(std::move(d));
      });
    }
    const auto& types = array_or_empty(o, "types");
    for (std::size_t i = 0; i < types.size(); ++i) {
      guarded(ptr(ptr(base, "types"), i), [&] {
        const auto& t = types[i];
        TypeDef d;
        d.name = text(t, "name");
        d.parent = text(t, "parent");
        for (const auto& a : array_or_empty(t, "attributes")) {
          AttributeRef ref{text(a, "name"), interval(a), std::nullopt, flag_or(a, "required", true)};
          if (a.contains("allowed")) ref.allowed = strings(a, "allowed");
          d.attributes.push_back(std::move(ref));
        }
        for (const auto& so : array_or_empty(t, "subobjects")) {
          d.subobjects.push_back({text(so, "type"), static_cast<std::size_t>(integer_or(so, "multiplicity", 1)),
                                  flag_or(so, "exact", false), text_or(so, "role", "")});
        }
        for (const auto& c : strings(t, "constraints")) d.constraints.push_back(parse(c));
        s_.ontology.add_type(std::move(d));
      });
    }
  });
}

void Loader::map() {
  const std::string base = "/map";
  std::map<std::string, std::size_t> index;
  guarded(base, [&] {
    const auto& m = field(doc_, "map");
    const auto& objects = array_or_empty(m, "objects");
    for (std::size_t i = 0; i < objects.size(); ++i) {
      guarded(ptr(ptr(base, "objects"), i), [&] {
        const auto& o = objects[i];
        ObjectInstance inst;
        inst.id = text(o, "id");
        inst.type = text(o, "type");
        if (o.contains("attributes")) {
          if (!o.at("attributes").is_object()) bad("'attributes' must be an object");
          for (const auto& [name, v] : o.at("attributes").items()) {
            if (v.is_object()) {
              inst.attributes[name] = AttributeValue{literal(field(v, "value")), text_or(v, "unit", "")};
            } else {
              inst.attributes[name] = AttributeValue{literal(v), ""};
            }
          }
        }
        if (o.contains("subobjects")) {
          if (!o.at("subobjects").is_object()) bad("'subobjects' must be an object");
          for (const auto& [role, ids] : o.at("subobjects").items()) {
            if (!ids.is_array()) bad("subobjects of a role must be an array of ids");
            for (const auto& id : ids) inst.subobjects[role].push_back(id.get<std::string>());
          }
        }
        if (s_.map.has_object(inst.id)) bad("duplicate object id '" + inst.id + "'");
        index[inst.id] = i;
        s_.map.put_object(std::move(inst));
      });
    }
    const auto facts = strings(m, "facts");
    for (std::size_t i = 0; i < facts.size(); ++i) {
      guarded(ptr(ptr(base, "facts"), i), [&] {
        const auto f = parse(facts[i]);
        if (f.kind != Formula::Kind::Atom || f.atom.negated || !f.atom.is_ground()) {
          bad("a fact is one positive ground atom");
        }
        validate_formula(s_.ontology, f);
        if (is_computed_relation(f.atom.relation)) bad("facts cannot use computed relation " + f.atom.relation);
        for (const auto& t : f.atom.args) {
          if (t.kind == Term::Kind::Object && !s_.map.has_object(t.name)) bad("unknown object '" + t.name + "'");
        }
        s_.map.assert_atom(f.atom);
      });
    }
  });
  for (const auto& v : validate_map(s_.ontology, s_.map).violations) {
    auto it = index.find(v.object_id);
    const auto where = it == index.end() ? base : ptr(ptr(base, "objects"), it->second);
    issues_.push_back({where, v.rule + ": " + v.message});
  }
}

void Loader::providers() {
  const std::string base = "/providers";
  std::set<std::string> ids;
  guarded(base, [&] {
    const auto& ps = array_or_empty(doc_, "providers");
    for (std::size_t i = 0; i < ps.size(); ++i) {
      const auto here = ptr(base, i);
      const auto before = issues_.size();
      guarded(here, [&] {
        const auto& j = ps[i];
        Provider p;
        p.id = text(j, "id");
        if (!ids.insert(p.id).second) bad("duplicate provider id '" + p.id + "'");
        p.kind = provider_kind(text_or(j, "kind", "device"));
        p.world_object = text_or(j, "world_object", "");
        p.behavior.capacity = static_cast<std::size_t>(integer_or(j, "capacity", 1));
        if (j.contains("durations")) {
          for (const auto& [type, d] : j.at("durations").items()) p.behavior.durations[type] = d.get<std::int64_t>();
        }
        const auto& services = array_or_empty(j, "services");
        for (std::size_t k = 0; k < services.size(); ++k) {
          guarded(ptr(ptr(here, "services"), k), [&] {
            const auto& sj = services[k];
            ServiceDescription d;
            d.type_name = text(sj, "type");
            d.kind = service_kind(text_or(sj, "kind", "physical"));
            d.inputs = parameters(sj, "inputs");
            d.outputs = parameters(sj, "outputs");
            d.precondition = formula(sj, "precondition", "true");
            d.effect = formula(sj, "effect", "true");
            if (sj.contains("range")) {
              const auto r = strings(sj, "range");
              d.attributes.operation_range.places = std::set<std::string>(r.begin(), r.end());
            }
            d.attributes.cost = number_or(sj, "cost", 1.0);
            d.attributes.avg_realization_time = integer_or(sj, "time", 1);
            d.active_marker = text_or(sj, "marker", "");
            validate_description(s_.ontology, d);
            p.offered.push_back(std::move(d));
          });
        }
        if (issues_.size() == before) validate_provider(s_.ontology, s_.map, p);
        s_.providers.push_back(std::move(p));
      });
      if (issues_.size() != before) bad_providers_.insert(i);
    }
  });
}

void Loader::tasks() {
  const std::string base = "/tasks";
  guarded(base, [&] {
    const auto& ts = array_or_empty(doc_, "tasks");
    for (std::size_t i = 0; i < ts.size(); ++i) {
      guarded(ptr(base, i), [&] {
        TaskSpec t;
        t.task.precondition = formula(ts[i], "precondition", "true");
        t.task.effect = formula(ts[i], "effect");
        validate_formula(s_.ontology, t.task.precondition);
        validate_formula(s_.ontology, t.task.effect);
        if (!free_variables(t.task.precondition).empty() || !free_variables(t.task.effect).empty()) {
          bad("task formulas must be ground");
        }
        t.submit_at = integer_or(ts[i], "submit", 0);
        if (t.submit_at < 0) bad("submit tick must be non-negative");
        s_.tasks.push_back(std::move(t));
      });
    }
  });
}

void Loader::safeguards() {
  const std::string base = "/safeguards";
  Registry registry;
  for (std::size_t i = 0; i < s_.providers.size(); ++i) {
    if (bad_providers_.count(i)) continue;
    guarded(ptr("/providers", i), [&] { registry.publish(s_.ontology, s_.map, s_.providers[i], 0); });
  }
  SafeguardStore store;
  guarded(base, [&] {
    const auto& gs = array_or_empty(doc_, "safeguards");
    for (std::size_t i = 0; i < gs.size(); ++i) {
      guarded(ptr(base, i), [&] {
        Safeguard g;
        g.id = text(gs[i], "id");
        g.critical = formula(gs[i], "critical");
        for (const auto& f : strings(gs[i], "safe")) g.safe_alternatives.push_back(parse(f));
        const auto scope = strings(gs[i], "scope");
        g.scope = std::set<std::string>(scope.begin(), scope.end());
        store.add(s_.ontology, g, registry);
        s_.safeguards.push_back(std::move(g));
      });
    }
  });
}

void Loader::schedule() {
  std::set<std::string> ids;
  for (const auto& p : s_.providers) ids.insert(p.id);
  auto known = [&](const std::string& id) {
    if (!ids.count(id)) throw Error(Errc::UnknownProvider, "unknown provider '" + id + "'");
  };
  guarded("/failures", [&] {
    const auto& fs = array_or_empty(doc_, "failures");
    for (std::size_t i = 0; i < fs.size(); ++i) {
      guarded(ptr("/failures", i), [&] {
        const auto& j = fs[i];
        FailureSpec f;
        f.provider = text(j, "provider");
        known(f.provider);
        if (j.contains("tick")) f.at_tick = integer_or(j, "tick", 0);
        if (j.contains("ordinal")) f.ordinal = static_cast<std::size_t>(integer_or(j, "ordinal", 1));
        if (f.at_tick.has_value() == f.ordinal.has_value()) bad("give exactly one of 'tick' and 'ordinal'");
        if (f.at_tick && *f.at_tick < 0) bad("trigger tick must be non-negative");
        if (f.ordinal && *f.ordinal == 0) bad("ordinals start at 1");
        f.after_ticks = integer_or(j, "after", 1);
        if (f.after_ticks < 0) bad("'after' must be non-negative");
        f.mode.kind = failure_kind(text_or(j, "mode", "fault"));
        f.mode.fraction = number_or(j, "fraction", 0.5);
        if (f.mode.kind == FailureMode::Kind::PartialEffect && (f.mode.fraction <= 0 || f.mode.fraction >= 1)) {
          bad("fraction must lie strictly between 0 and 1");
        }
        f.mode.silent_after = flag_or(j, "silent_after", false);
        s_.failures.push_back(std::move(f));
      });
    }
  });
  guarded("/events", [&] {
    const auto& es = array_or_empty(doc_, "events");
    for (std::size_t i = 0; i < es.size(); ++i) {
      guarded(ptr("/events", i), [&] {
        WorldEvent e;
        e.tick = integer_or(es[i], "tick", 0);
        if (e.tick < 0) bad("event tick must be non-negative");
        for (const auto& a : strings(es[i], "atoms")) {
          const auto f = parse(a);
          if (f.kind != Formula::Kind::Atom || !f.atom.is_ground()) bad("'" + a + "' is not a ground atom");
          validate_formula(s_.ontology, f);
          e.atoms.push_back(f.atom);
        }
        s_.events.push_back(std::move(e));
      });
    }
  });
  guarded("/cancellations", [&] {
    const auto& cs = array_or_empty(doc_, "cancellations");
    for (std::size_t i = 0; i < cs.size(); ++i) {
      guarded(ptr("/cancellations", i), [&] {
        CancelEvent c;
        c.tick = integer_or(cs[i], "tick", 0);
        const auto task = integer_or(cs[i], "task", 0);
        if (task < 0 || static_cast<std::size_t>(task) >= s_.tasks.size()) bad("no task " + std::to_string(task));
        c.task = static_cast<std::size_t>(task);
        s_.cancellations.push_back(c);
      });
    }
  });
  guarded("/withdrawals", [&] {
    const auto& ws = array_or_empty(doc_, "withdrawals");
    for (std::size_t i = 0; i < ws.size(); ++i) {
      guarded(ptr("/withdrawals", i), [&] {
        WithdrawEvent w;
        w.tick = integer_or(ws[i], "tick", 0);
        w.provider = text(ws[i], "provider");
        known(w.provider);
        s_.withdrawals.push_back(std::move(w));
      });
    }
  });
}

void Loader::config() {
  if (!doc_.contains("config")) return;
  guarded("/config", [&] {
    const auto& c = doc_.at("config");
    if (!c.is_object()) bad("expected an object");
    auto& k = s_.config;
    k.seed = static_cast<std::uint64_t>(integer_or(c, "seed", 0));
    k.max_ticks = integer_or(c, "max_ticks", k.max_ticks);
    k.timeout_ticks = integer_or(c, "timeout_ticks", k.timeout_ticks);
    k.max_replans = static_cast<std::size_t>(integer_or(c, "max_replans", static_cast<std::int64_t>(k.max_replans)));
    k.search_budget =
        static_cast<std::size_t>(integer_or(c, "search_budget", static_cast<std::int64_t>(k.search_budget)));
    k.response_bound = integer_or(c, "response_bound", k.response_bound);
    k.jitter = integer_or(c, "jitter", k.jitter);
    if (k.max_ticks <= 0 || k.timeout_ticks <= 0 || k.response_bound <= 0 || k.jitter < 0) {
      bad("max_ticks, timeout_ticks and response_bound must be positive, jitter non-negative");
    }
  });
}

ScenarioLoad Loader::run() {
  static const std::set<std::string> sections{"name",   "ontology", "map",           "providers",   "tasks", "safeguards",
                                              "failures", "events", "cancellations", "withdrawals", "config"};
  ScenarioLoad out;
  if (!doc_.is_object()) {
    out.issues.push_back({"", "a scenario is a JSON object"});
    return out;
  }
  for (const auto& [key, v] : doc_.items()) {
    if (!sections.count(key)) issues_.push_back({"/" + key, "unknown section"});
  }
  guarded("/name", [&] { s_.name = text_or(doc_, "name", ""); });
  ontology();
  map();
  providers();
  tasks();
  safeguards();
  schedule();
  config();
  out.issues = std::move(issues_);
  if (out.issues.empty()) out.scenario = std::move(s_);
  return out;
}

}  // namespace

ScenarioLoad load_scenario(const nlohmann::json& doc) { return Loader(doc).run(); }

Scenario parse_scenario(const nlohmann::json& doc) {
  auto r = load_scenario(doc);
  if (!r.scenario) {
    const auto& i = r.issues.front();
    throw Error(Errc::InvalidScenario, (i.pointer.empty() ? "/" : i.pointer) + ": " + i.message);
  }
  return std::move(*r.scenario);
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::InvalidScenario, "cannot read " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::InvalidScenario, path + ": " + e.what());
  }
}

}  // namespace hrc
