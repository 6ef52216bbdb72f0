#pragma once

// Scenario documents: one JSON file per reproducible experiment.
//
// Top-level sections: name, ontology {attributes, relations, types}, map
// {objects, facts}, providers, tasks, safeguards, failures, events,
// cancellations, withdrawals, config. Formulas are strings in the formula
// syntax. The ontology section extends the built-in upper ontology.

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "hrc/simulation.hpp"

namespace hrc {

struct ScenarioIssue {
  std::string pointer;  // JSON pointer into the document
  std::string message;
};

struct ScenarioLoad {
  std::optional<Scenario> scenario;  // set iff there are no issues
  std::vector<ScenarioIssue> issues;
};

// Reads and checks every section, collecting all issues.
ScenarioLoad load_scenario(const nlohmann::json& doc);

// Throws InvalidScenario naming the first issue.
Scenario parse_scenario(const nlohmann::json& doc);

// Reads a file; throws InvalidScenario when it is unreadable or not JSON.
nlohmann::json read_json_file(const std::string& path);

}  // namespace hrc
