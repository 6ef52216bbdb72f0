#pragma once

// Brute-force reachability over the explicit state graph. Services are
// grounded by enumerating every object assignment of their variables; a
// state is the set of true tuples. Shares no code with the planner.

#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hrc/formula.hpp"
#include "hrc/ontology.hpp"
#include "hrc/services.hpp"
#include "hrc/world_map.hpp"

namespace hrc::acceptance {

using State = std::set<Atom>;

struct GroundAction {
  std::vector<Atom> pre;     // literals
  std::vector<Atom> effect;  // literals
};

inline void flatten(const Formula& f, std::vector<Atom>& out) {
  if (f.kind == Formula::Kind::Atom) out.push_back(f.atom);
  for (const auto& c : f.children) flatten(c, out);
}

inline Atom ground_atom(const Atom& a, const std::map<std::string, std::string>& b) {
  Atom g = a;
  for (auto& t : g.args) {
    if (t.is_variable()) t = Term::object(b.at(t.name));
  }
  return g;
}

inline bool holds(const State& s, const Atom& lit) { return (s.count(lit.positive()) != 0) != lit.negated; }

// Conjunctive descriptions only; typed inputs restrict their variables.
inline std::vector<GroundAction> ground_all(const Ontology& onto, const WorldMap& map,
                                            const std::vector<ServiceDescription>& services) {
  std::vector<GroundAction> out;
  for (const auto& d : services) {
    std::vector<Atom> pre;
    std::vector<Atom> eff;
    flatten(d.precondition, pre);
    flatten(d.effect, eff);
    std::set<std::string> var_set;
    for (const auto* list : {&pre, &eff}) {
      for (const auto& a : *list) {
        for (const auto& t : a.args) {
          if (t.is_variable()) var_set.insert(t.name);
        }
      }
    }
    const std::vector<std::string> vars(var_set.begin(), var_set.end());
    std::vector<std::vector<std::string>> domain(vars.size());
    for (std::size_t i = 0; i < vars.size(); ++i) {
      std::string type;
      for (const auto& p : d.inputs) {
        if (p.name == vars[i]) type = p.type;
      }
      for (const auto& [id, o] : map.objects()) {
        if (type.empty() || onto.is_subtype(o.type, type)) domain[i].push_back(id);
      }
    }
    std::vector<std::size_t> idx(vars.size(), 0);
    bool empty = false;
    for (const auto& dom : domain) empty = empty || dom.empty();
    if (empty) continue;
    while (true) {
      std::map<std::string, std::string> b;
      for (std::size_t i = 0; i < vars.size(); ++i) b[vars[i]] = domain[i][idx[i]];
      GroundAction g;
      for (const auto& a : pre) g.pre.push_back(ground_atom(a, b));
      for (const auto& a : eff) g.effect.push_back(ground_atom(a, b));
      out.push_back(std::move(g));
      std::size_t k = 0;
      while (k < vars.size() && ++idx[k] == domain[k].size()) idx[k++] = 0;
      if (k == vars.size()) break;
    }
  }
  return out;
}

inline State successor(State s, const GroundAction& a) {
  for (const auto& l : a.effect) {
    if (l.negated) s.erase(l.positive());
  }
  for (const auto& l : a.effect) {
    if (!l.negated) s.insert(l.positive());
  }
  return s;
}

struct OracleResult {
  std::optional<std::size_t> shortest;  // steps
  std::size_t explored = 0;
  bool truncated = false;  // more than `limit` states
};

// `goal` and `forbidden` are literal conjunctions; a forbidden state is any
// state where one of the `forbidden` conjunctions holds.
inline OracleResult shortest_plan(const State& start, const std::vector<GroundAction>& actions,
                                  const std::vector<Atom>& goal, const std::vector<std::vector<Atom>>& forbidden,
                                  std::size_t limit = 100000) {
  auto all = [](const State& s, const std::vector<Atom>& lits) {
    for (const auto& l : lits) {
      if (!holds(s, l)) return false;
    }
    return true;
  };
  auto bad = [&](const State& s) {
    for (const auto& f : forbidden) {
      if (all(s, f)) return true;
    }
    return false;
  };
  OracleResult r;
  std::map<State, std::size_t> dist{{start, 0}};
  std::deque<State> q{start};
  while (!q.empty()) {
    const State cur = q.front();
    q.pop_front();
    ++r.explored;
    if (all(cur, goal)) {
      r.shortest = dist[cur];
      return r;
    }
    for (const auto& a : actions) {
      if (!all(cur, a.pre)) continue;
      State next = successor(cur, a);
      if (dist.count(next) || bad(next)) continue;
      if (dist.size() >= limit) {
        r.truncated = true;
        return r;
      }
      dist[next] = dist[cur] + 1;
      q.push_back(std::move(next));
    }
  }
  return r;
}

}  // namespace hrc::acceptance
