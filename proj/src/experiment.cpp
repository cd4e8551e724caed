#include "tsc/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace tsc {

Controller pretimed_controller(const PretimedPlan& plan) {
  plan.validate();
  return [plan](const WorldState& w) { return pretimed_decide(w.phase, plan); };
}

Controller longest_queue_controller(const Hyperparams& hp, int margin) {
  return [hp, margin](const WorldState& w) {
    return apply_phase_guard(longest_queue_decide(measure_state(w), margin), w.phase, hp);
  };
}

MetricsRecord run_episode(const ScenarioConfig& scenario, const Controller& controller, std::uint64_t seed,
                          const std::string& label, double decision_interval) {
  MetricsRecord m = run_controller(scenario, controller, seed, decision_interval);
  m.controller = label;
  return m;
}

AgentCache::Key AgentCache::key(const ScenarioConfig& s) {
  return {s.name, s.arrivals.detection_rate, s.flow_scale, !s.perturbations.none()};
}

void AgentCache::provide(const ScenarioConfig& scenario, QNetwork net) {
  nets_.insert_or_assign(key(scenario), std::move(net));
}

const QNetwork& AgentCache::get(const ScenarioConfig& scenario) {
  const Key k = key(scenario);
  auto it = nets_.find(k);
  if (it != nets_.end()) return it->second;
  if (progress_) progress_(scenario);
  auto trained = train_agent(scenario, hp_, train_seed_);
  ++trained_;
  return nets_.emplace(k, std::move(trained.network)).first->second;
}

Stat summarize(const std::vector<double>& values) {
  Stat s;
  s.n = values.size();
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  s.mean = mean;
  if (values.size() >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
    s.ci95 = 1.96 * sd / std::sqrt(static_cast<double>(values.size()));
  }
  return s;
}

namespace {

auto cell_key(const MetricsRecord& m) {
  return std::make_tuple(m.scenario, m.controller, m.detection_rate, m.flow_scale);
}

std::vector<MetricsRecord> sorted_rows(const SweepResult& r) {
  auto rows = r.rows;
  std::stable_sort(rows.begin(), rows.end(), [](const MetricsRecord& a, const MetricsRecord& b) {
    return std::tuple_cat(cell_key(a), std::make_tuple(a.seed)) < std::tuple_cat(cell_key(b), std::make_tuple(b.seed));
  });
  return rows;
}

}  // namespace

std::vector<CellSummary> aggregate(const SweepResult& result) {
  std::vector<CellSummary> out;
  const auto rows = sorted_rows(result);
  for (std::size_t i = 0; i < rows.size();) {
    std::size_t j = i;
    std::vector<double> all, det, undet, trip, dep;
    while (j < rows.size() && cell_key(rows[j]) == cell_key(rows[i])) {
      const auto& m = rows[j];
      if (m.wait_all) all.push_back(*m.wait_all);
      if (m.wait_detected) det.push_back(*m.wait_detected);
      if (m.wait_undetected) undet.push_back(*m.wait_undetected);
      if (m.trip_mean) trip.push_back(*m.trip_mean);
      dep.push_back(static_cast<double>(m.departures));
      ++j;
    }
    CellSummary c;
    c.scenario = rows[i].scenario;
    c.controller = rows[i].controller;
    c.detection_rate = rows[i].detection_rate;
    c.flow_scale = rows[i].flow_scale;
    c.reps = j - i;
    c.wait_all = summarize(all);
    c.wait_detected = summarize(det);
    c.wait_undetected = summarize(undet);
    c.trip = summarize(trip);
    c.departures = summarize(dep);
    out.push_back(std::move(c));
    i = j;
  }
  return out;
}

std::optional<CellSummary> find_cell(const std::vector<CellSummary>& cells, const std::string& controller,
                                     double detection_rate, double flow_scale, const std::string& scenario) {
  for (const auto& c : cells)
    if (c.controller == controller && std::abs(c.detection_rate - detection_rate) < 1e-12 &&
        std::abs(c.flow_scale - flow_scale) < 1e-12 && (scenario.empty() || c.scenario == scenario))
      return c;
  return std::nullopt;
}

SweepResult sweep_detection_rate(const ScenarioConfig& scenario, const std::vector<double>& rates,
                                 AgentCache& agents, const SweepOptions& options) {
  const Hyperparams& hp = agents.hyperparams();
  SweepResult out;
  for (std::size_t i = 0; i < rates.size(); ++i) {
    if (!(rates[i] >= 0.0 && rates[i] <= 1.0)) throw std::invalid_argument("detection rates must lie in [0, 1]");
    const ScenarioConfig cell = scenario.with_detection_rate(rates[i]);
    const Controller agent = agent_controller(agents.get(cell), cell.road, hp);
    for (int j = 0; j < options.reps; ++j) {
      const auto seed = cell_seed(options.base_seed, i, static_cast<std::size_t>(j));
      out.rows.push_back(run_episode(cell, agent, seed, "agent", hp.decision_interval));
      if (options.include_pretimed)
        out.rows.push_back(run_episode(cell, pretimed_controller(options.plan), seed, "pretimed", hp.decision_interval));
      if (options.include_longest_queue)
        out.rows.push_back(
            run_episode(cell, longest_queue_controller(hp), seed, "longest_queue", hp.decision_interval));
    }
  }
  return out;
}

SweepResult sensitivity_sweep(const ScenarioConfig& scenario, SensitivityAxis axis, double train_value,
                              const std::vector<double>& eval_values, AgentCache& agents,
                              const SweepOptions& options) {
  const Hyperparams& hp = agents.hyperparams();
  auto at = [&](double v) {
    return axis == SensitivityAxis::Flow ? scenario.with_flow_scale(v) : scenario.with_detection_rate(v);
  };
  const ScenarioConfig trained_on = at(train_value);
  const QNetwork fixed = agents.get(trained_on);

  SweepResult out;
  for (std::size_t i = 0; i < eval_values.size(); ++i) {
    const ScenarioConfig cell = at(eval_values[i]);
    const Controller fixed_ctl = agent_controller(fixed, cell.road, hp);
    const Controller optimal_ctl = agent_controller(agents.get(cell), cell.road, hp);
    for (int j = 0; j < options.reps; ++j) {
      const auto seed = cell_seed(options.base_seed, i, static_cast<std::size_t>(j));
      out.rows.push_back(run_episode(cell, fixed_ctl, seed, "fixed", hp.decision_interval));
      out.rows.push_back(run_episode(cell, optimal_ctl, seed, "optimal", hp.decision_interval));
      if (options.include_pretimed)
        out.rows.push_back(run_episode(cell, pretimed_controller(options.plan), seed, "pretimed", hp.decision_interval));
    }
  }
  return out;
}

namespace {

void run_binned_day(const ScenarioConfig& s, const Controller& ctl, std::uint64_t seed, const std::string& label,
                    double decision_interval, SweepResult& out) {
  Episode ep(s, seed, decision_interval);
  while (!ep.done()) ep.advance(ctl(ep.world()));
  const double from = ep.start_time() + s.warmup;
  for (int h = 0; h < 24; ++h) {
    const double lo = std::max(from, 3600.0 * h), hi = 3600.0 * (h + 1);
    MetricsRecord m = collect_metrics(ep.departed(), s.road, lo, hi);
    char tag[16];
    std::snprintf(tag, sizeof tag, "@h%02d", h);
    m.scenario = s.name + tag;
    m.controller = label;
    m.detection_rate = s.arrivals.detection_rate;
    m.flow_scale = s.flow_scale;
    m.seed = seed;
    out.rows.push_back(std::move(m));
  }
}

}  // namespace

SweepResult whole_day_eval(const ScenarioConfig& day, const std::vector<double>& rates, AgentCache& agents,
                           const SweepOptions& options) {
  const Hyperparams& hp = agents.hyperparams();
  ScenarioConfig full = day;
  full.start_time = 0.0;
  full.episode_length = 86400.0;
  SweepResult out;
  for (std::size_t i = 0; i < rates.size(); ++i) {
    const ScenarioConfig cell = full.with_detection_rate(rates[i]);
    const Controller agent = agent_controller(agents.get(cell), cell.road, hp);
    for (int j = 0; j < options.reps; ++j) {
      const auto seed = cell_seed(options.base_seed, i, static_cast<std::size_t>(j));
      run_binned_day(cell, agent, seed, "agent", hp.decision_interval, out);
      if (options.include_pretimed)
        run_binned_day(cell, pretimed_controller(options.plan), seed, "pretimed", hp.decision_interval, out);
    }
  }
  return out;
}

std::vector<PerturbationVariant> standard_perturbations() {
  return {{"none", {}},
          {"bulk", {3.0, 0.0, false}},
          {"speed_noise", {1.0, 0.1, false}},
          {"midlane", {1.0, 0.0, true}},
          {"combined", {3.0, 0.1, true}}};
}

SweepResult robustness_eval(const ScenarioConfig& scenario, const std::vector<double>& rates,
                            const std::vector<PerturbationVariant>& variants, AgentCache& agents,
                            const SweepOptions& options) {
  const Hyperparams& hp = agents.hyperparams();
  const ScenarioConfig clean = scenario.with_perturbations({});
  SweepResult out;
  for (std::size_t i = 0; i < rates.size(); ++i) {
    const ScenarioConfig trained_on = clean.with_detection_rate(rates[i]);
    const Controller agent = agent_controller(agents.get(trained_on), trained_on.road, hp);
    for (const auto& v : variants) {
      ScenarioConfig cell = trained_on.with_perturbations(v.perturbations);
      cell.name = scenario.name + "+" + v.name;
      for (int j = 0; j < options.reps; ++j) {
        const auto seed = cell_seed(options.base_seed, i, static_cast<std::size_t>(j));
        out.rows.push_back(run_episode(cell, agent, seed, "agent", hp.decision_interval));
        if (options.include_pretimed)
          out.rows.push_back(run_episode(cell, pretimed_controller(options.plan), seed, "pretimed", hp.decision_interval));
      }
    }
  }
  return out;
}

std::vector<RobustnessDelta> robustness_deltas(const SweepResult& result, const std::string& base_name) {
  const auto cells = aggregate(result);
  const std::string prefix = base_name + "+";
  std::vector<RobustnessDelta> out;
  for (const auto& c : cells) {
    if (c.controller != "agent" || c.scenario.rfind(prefix, 0) != 0) continue;
    RobustnessDelta d;
    d.variant = c.scenario.substr(prefix.size());
    d.detection_rate = c.detection_rate;
    d.wait_all = c.wait_all.mean;
    const auto base = find_cell(cells, "agent", c.detection_rate, c.flow_scale, prefix + "none");
    if (base && base->wait_all.mean && c.wait_all.mean) d.delta_vs_unperturbed = *c.wait_all.mean - *base->wait_all.mean;
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace tsc
