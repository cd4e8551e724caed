#include "tsc/episode.hpp"

#include <cmath>

namespace tsc {

Episode::Episode(const ScenarioConfig& scenario, std::uint64_t seed, double decision_interval,
                 std::optional<double> start_time, std::optional<double> length)
    : scenario_(scenario) {
  scenario_.validate();
  const double dt = scenario_.road.sim_dt;
  const double ticks = decision_interval / dt;
  if (!(decision_interval > 0.0) || std::abs(ticks - std::round(ticks)) > 1e-9)
    throw std::invalid_argument("decision interval must be a positive multiple of sim_dt");
  ticks_ = static_cast<int>(std::round(ticks));
  start_ = start_time.value_or(scenario_.start_time);
  end_ = start_ + length.value_or(scenario_.episode_length);
  world_ = make_world(scenario_.road, scenario_.arrivals, seed, start_, scenario_.perturbations);
}

double Episode::advance(Action command) {
  double sum = 0.0;
  for (int t = 0; t < ticks_; ++t) {
    auto stats = step_simulation(world_, t == 0 ? command : Action::Keep, scenario_.road.sim_dt);
    sum += stats.reward;
    departed_.insert(departed_.end(), stats.departed.begin(), stats.departed.end());
  }
  return sum / static_cast<double>(ticks_);
}

MetricsRecord Episode::metrics() const {
  MetricsRecord m = collect_metrics(departed_, scenario_.road, start_ + scenario_.warmup);
  m.scenario = scenario_.name;
  m.detection_rate = scenario_.arrivals.detection_rate;
  m.flow_scale = scenario_.flow_scale;
  return m;
}

MetricsRecord run_controller(const ScenarioConfig& scenario, const Controller& controller, std::uint64_t seed,
                             double decision_interval) {
  Episode ep(scenario, seed, decision_interval);
  while (!ep.done()) ep.advance(controller(ep.world()));
  MetricsRecord m = ep.metrics();
  m.seed = seed;
  return m;
}

}  // namespace tsc
