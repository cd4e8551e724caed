#pragma once

#include "tsc/metrics.hpp"
#include "tsc/scenario.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace tsc {

/// Drives one simulated episode at decision granularity: each `advance`
/// applies a command on the first enclosed tick and holds for the rest.
class Episode {
 public:
  Episode(const ScenarioConfig& scenario, std::uint64_t seed, double decision_interval,
          std::optional<double> start_time = std::nullopt, std::optional<double> length = std::nullopt);

  const WorldState& world() const { return world_; }
  const ScenarioConfig& scenario() const { return scenario_; }
  bool done() const { return world_.clock >= end_ - 1e-9; }
  double start_time() const { return start_; }
  int ticks_per_decision() const { return ticks_; }

  /// Returns the mean of the enclosed tick rewards.
  double advance(Action command);

  const std::vector<Vehicle>& departed() const { return departed_; }

  /// Metrics over vehicles generated after the warm-up period.
  MetricsRecord metrics() const;

 private:
  ScenarioConfig scenario_;
  WorldState world_;
  double start_;
  double end_;
  int ticks_;
  std::vector<Vehicle> departed_;
};

/// Maps the current world to a command, once per decision interval.
using Controller = std::function<Action(const WorldState&)>;

/// Runs a whole episode under `controller`.
MetricsRecord run_controller(const ScenarioConfig& scenario, const Controller& controller, std::uint64_t seed,
                             double decision_interval = 1.0);

}  // namespace tsc
