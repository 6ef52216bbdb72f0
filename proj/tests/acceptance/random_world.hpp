#pragma once

// Random lab worlds: rooms joined by one-way doors, boxes to deliver, and
// robots offering transport (and sometimes a service that opens the reverse
// door).

#include <random>
#include <set>
#include <string>
#include <vector>

#include "hrc/simulation.hpp"
#include "support/fixtures.hpp"

namespace hrc::acceptance {

inline std::size_t draw(std::mt19937_64& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

inline ServiceDescription connect_service() {
  ServiceDescription d;
  d.type_name = "open_door";
  d.kind = ServiceKind::Physical;
  d.precondition = parse("isAdjacentTo(?a, ?b)");
  d.effect = parse("isAdjacentTo(?b, ?a)");
  d.attributes.cost = 1;
  d.attributes.avg_realization_time = 1;
  return d;
}

struct RandomWorld {
  Scenario scenario;
  std::vector<std::string> rooms;
  std::vector<std::string> boxes;
  std::vector<std::vector<Atom>> forbidden;  // ground critical conjunctions
  std::vector<Atom> goal;
};

inline Atom fact(const std::string& text) { return parse(text).atom; }

// Planner suite: 3..5 rooms, 1..2 boxes, optional reverse-door service and
// an optional forbidden room.
inline RandomWorld random_planning_world(std::mt19937_64& rng) {
  RandomWorld w;
  Scenario& s = w.scenario;
  s.name = "random";
  s.ontology = testing::lab_ontology();
  const bool doors_service = draw(rng, 3) == 0;
  const std::size_t n = doors_service ? 3 + draw(rng, 2) : 3 + draw(rng, 3);
  const std::size_t boxes = doors_service ? 1 : 1 + draw(rng, 2);
  for (std::size_t i = 0; i < n; ++i) {
    w.rooms.push_back("room" + std::to_string(i));
    s.map.put_object(ObjectInstance{w.rooms.back(), "Room", {}, {}});
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j && draw(rng, 3) == 0) {
        s.map.assert_atom(fact("isAdjacentTo(" + w.rooms[i] + ", " + w.rooms[j] + ")"));
      }
    }
  }
  for (std::size_t b = 0; b < boxes; ++b) {
    w.boxes.push_back("box" + std::to_string(b + 1));
    s.map.put_object(ObjectInstance{w.boxes.back(), "Box", {}, {}});
    const auto& start = w.rooms[draw(rng, n)];
    s.map.assert_atom(fact("isIn(" + w.boxes.back() + ", " + start + ")"));
  }
  const std::size_t robots = 1 + draw(rng, 2);
  for (std::size_t k = 0; k < robots; ++k) {
    const std::string obj = "robot" + std::to_string(k + 1);
    s.map.put_object(ObjectInstance{obj, "MobileRobot", {}, {}});
    std::vector<ServiceDescription> offered{testing::transport(1.0 + static_cast<double>(k), 1)};
    if (doors_service) offered.push_back(connect_service());
    auto p = testing::robot("carrier" + std::to_string(k + 1), offered);
    p.world_object = obj;
    s.providers.push_back(std::move(p));
  }
  std::vector<Formula> goals;
  for (const auto& b : w.boxes) {
    const auto& target = w.rooms[draw(rng, n)];
    w.goal.push_back(fact("isIn(" + b + ", " + target + ")"));
    goals.push_back(Formula::of(w.goal.back()));
  }
  if (draw(rng, 3) == 0) {
    // A room no box may enter; never a start or a target.
    std::set<std::string> used;
    for (const auto& t : s.map.tuples()) {
      if (t.relation == "isIn") used.insert(t.args[1].name);
    }
    for (const auto& g : w.goal) used.insert(g.args[1].name);
    std::vector<std::string> free;
    for (const auto& r : w.rooms) {
      if (!used.count(r)) free.push_back(r);
    }
    if (!free.empty()) {
      const auto& bad = free[draw(rng, free.size())];
      const Atom crit = fact("isIn(box1, " + bad + ")");
      s.safeguards.push_back(Safeguard{"keep_out", Formula::of(crit), {parse("not isIn(box1, " + bad + ")")}, {}});
      w.forbidden.push_back({crit});
    }
  }
  s.tasks.push_back({Task{Formula::truth(), Formula::conjunction(goals)}, 0});
  s.config.max_ticks = 200;
  s.config.seed = rng();
  return w;
}

// Transport corridor for the recovery suites: a chain of 3..5 rooms and
// 2..3 interchangeable carriers with distinct costs.
inline Scenario random_corridor(std::mt19937_64& rng, std::size_t carriers, bool marked, bool with_camera) {
  Scenario s;
  s.name = "corridor";
  s.ontology = testing::lab_ontology();
  const std::size_t n = 3 + draw(rng, 3);
  std::vector<std::string> rooms;
  for (std::size_t i = 0; i < n; ++i) {
    rooms.push_back("room" + std::to_string(i));
    s.map.put_object(ObjectInstance{rooms.back(), "Room", {}, {}});
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    s.map.assert_atom(fact("isAdjacentTo(" + rooms[i] + ", " + rooms[i + 1] + ")"));
    s.map.assert_atom(fact("isAdjacentTo(" + rooms[i + 1] + ", " + rooms[i] + ")"));
  }
  s.map.put_object(ObjectInstance{"box1", "Box", {}, {}});
  s.map.assert_atom(fact("isIn(box1, " + rooms[0] + ")"));
  for (std::size_t k = 0; k < carriers; ++k) {
    const std::string obj = "robot" + std::to_string(k + 1);
    s.map.put_object(ObjectInstance{obj, "MobileRobot", {}, {}});
    auto p = testing::robot("carrier" + std::to_string(k + 1),
                            {testing::transport(1.0 + static_cast<double>(k), static_cast<std::int64_t>(1 + draw(rng, 3)),
                                                std::nullopt, marked ? "robotActiveIn" : "")});
    p.world_object = obj;
    s.providers.push_back(std::move(p));
  }
  if (with_camera) {
    s.map.put_object(ObjectInstance{"cam", "Sensor", {}, {}});
    Provider cam;
    cam.id = "camera";
    cam.world_object = "cam";
    ServiceDescription d;
    d.type_name = "inspect";
    d.kind = ServiceKind::Cognitive;
    d.attributes.avg_realization_time = 1;
    cam.offered.push_back(d);
    s.providers.push_back(std::move(cam));
  }
  s.tasks.push_back({testing::move_task("box1", rooms[0], rooms[n - 1]), 0});
  s.config.seed = rng();
  s.config.timeout_ticks = 4;
  s.config.max_ticks = 400;
  return s;
}

inline std::size_t corridor_length(const Scenario& s) {
  std::size_t rooms = 0;
  for (const auto& [id, o] : s.map.objects()) rooms += o.type == "Room" ? 1 : 0;
  return rooms - 1;
}

}  // namespace hrc::acceptance
