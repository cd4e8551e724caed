#pragma once

#include "tsc/sim.hpp"

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tsc {

class ConfigError : public std::runtime_error {
 public:
  enum class Kind { MissingFile, Parse, Schema };

  ConfigError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct ScenarioConfig {
  std::string name = "custom";
  RoadParams road;
  ArrivalSpec arrivals;
  double episode_length = 3600.0;  // s
  double start_time = 0.0;         // s since midnight
  double warmup = 300.0;           // s excluded from metrics
  Perturbations perturbations;
  double flow_scale = 1.0;  // factor already applied to `arrivals`

  void validate() const;
  bool time_varying() const;

  ScenarioConfig with_detection_rate(double p) const;
  /// Multiplies every arrival rate by `factor` (relative to the current rates).
  ScenarioConfig with_flow_scale(double factor) const;
  ScenarioConfig with_perturbations(const Perturbations& p) const;

  bool operator==(const ScenarioConfig&) const = default;
};

/// Total intersection demand (veh/s) per hour of the built-in day profile.
const std::vector<double>& builtin_day_profile();

std::vector<std::string> builtin_scenario_names();
ScenarioConfig builtin_scenario(std::string_view name);

/// Parses the JSON scenario schema (see docs/scenario-schema.md).
ScenarioConfig parse_scenario(std::string_view text);

/// Loads a scenario file, or a built-in scenario when `path_or_name` names
/// one and no such file exists.
ScenarioConfig load_scenario(const std::string& path_or_name);

}  // namespace tsc
