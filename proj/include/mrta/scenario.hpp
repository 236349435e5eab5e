#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "mrta/sim.hpp"

namespace mrta::scenario {

/// Parse or validation failure. For syntax errors location() is
/// "line L, column C"; for semantic errors it is a document path such as
/// "robots[1].specialization".
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(const std::string& location, const std::string& message)
      : std::runtime_error(location.empty() ? message : location + ": " + message), location_(location) {}

  const std::string& location() const { return location_; }

 private:
  std::string location_;
};

/// Omitted params, gamma and dt take their defaults; dimension, robots, tasks,
/// pi_star and duration are required.
sim::Scenario parse_scenario(const std::string& text);

sim::Scenario load_scenario(const std::filesystem::path& path);

nlohmann::json to_json(const sim::Scenario& s);

/// Pretty-printed JSON; doubles keep full round-trip precision.
std::string serialize_scenario(const sim::Scenario& s);

}  // namespace mrta::scenario
