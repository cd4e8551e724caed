#pragma once

#include "tsc/agent.hpp"
#include "tsc/baselines.hpp"
#include "tsc/metrics.hpp"
#include "tsc/scenario.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace tsc {

/// Seed of replication `rep` in sweep cell `cell`.
constexpr std::uint64_t cell_seed(std::uint64_t base, std::size_t cell, std::size_t rep) {
  return base + cell * 10000u + rep;
}

Controller pretimed_controller(const PretimedPlan& plan = {});
Controller longest_queue_controller(const Hyperparams& hp, int margin = 1);

/// One episode under `controller`, labelled `label`. The warm-up period is
/// excluded from the averages.
MetricsRecord run_episode(const ScenarioConfig& scenario, const Controller& controller, std::uint64_t seed,
                          const std::string& label, double decision_interval = 1.0);

/// Trains agents on demand and remembers them, so every sweep cell that
/// needs an agent for a given training scenario reuses the same network.
class AgentCache {
 public:
  using ProgressFn = std::function<void(const ScenarioConfig&)>;

  AgentCache(Hyperparams hp, std::uint64_t train_seed) : hp_(std::move(hp)), train_seed_(train_seed) {}

  const Hyperparams& hyperparams() const { return hp_; }
  void on_train(ProgressFn fn) { progress_ = std::move(fn); }

  /// Registers a pre-trained network for `scenario`; it will not be retrained.
  void provide(const ScenarioConfig& scenario, QNetwork net);
  /// Network for a training scenario; trains it on first use.
  const QNetwork& get(const ScenarioConfig& scenario);
  std::size_t trained_count() const { return trained_; }

 private:
  using Key = std::tuple<std::string, double, double, bool>;
  static Key key(const ScenarioConfig& s);

  Hyperparams hp_;
  std::uint64_t train_seed_;
  std::map<Key, QNetwork> nets_;
  ProgressFn progress_;
  std::size_t trained_ = 0;
};

struct SweepOptions {
  int reps = 5;
  std::uint64_t base_seed = 1;
  bool include_pretimed = true;
  bool include_longest_queue = false;
  PretimedPlan plan;
};

/// Per-(cell, replication) records. Row order is not significant; exports
/// sort it.
struct SweepResult {
  std::vector<MetricsRecord> rows;

  void append(const SweepResult& other) { rows.insert(rows.end(), other.rows.begin(), other.rows.end()); }
};

struct Stat {
  std::optional<double> mean;
  std::optional<double> ci95;  // 1.96 * sd / sqrt(n), needs n >= 2
  std::size_t n = 0;
};

Stat summarize(const std::vector<double>& values);

struct CellSummary {
  std::string scenario;
  std::string controller;
  double detection_rate = 0.0;
  double flow_scale = 1.0;
  std::size_t reps = 0;
  Stat wait_all, wait_detected, wait_undetected, trip, departures;
};

/// Groups rows by (scenario, controller, detection_rate, flow_scale), sorted.
std::vector<CellSummary> aggregate(const SweepResult& result);

/// Finds one aggregated cell; nullopt if absent.
std::optional<CellSummary> find_cell(const std::vector<CellSummary>& cells, const std::string& controller,
                                     double detection_rate, double flow_scale = 1.0,
                                     const std::string& scenario = "");

/// One agent per detection rate, each trained and evaluated at that rate,
/// plus the pre-timed reference (and longest-queue if requested).
SweepResult sweep_detection_rate(const ScenarioConfig& scenario, const std::vector<double>& rates,
                                 AgentCache& agents, const SweepOptions& options);

enum class SensitivityAxis { Flow, DetectionRate };

/// Controller "fixed" is the agent trained at `train_value`; "optimal" is
/// the agent trained at each evaluation value. Flow values scale the
/// scenario's arrival rates.
SweepResult sensitivity_sweep(const ScenarioConfig& scenario, SensitivityAxis axis, double train_value,
                              const std::vector<double>& eval_values, AgentCache& agents,
                              const SweepOptions& options);

/// 24-hour runs on a time-varying scenario, binned by arrival hour. Scenario
/// labels carry the bin as "<name>@hHH".
SweepResult whole_day_eval(const ScenarioConfig& day, const std::vector<double>& rates, AgentCache& agents,
                           const SweepOptions& options);

struct PerturbationVariant {
  std::string name;
  Perturbations perturbations;
};

/// The standard set: none, bulk, speed noise, mid-lane spawns, all combined.
std::vector<PerturbationVariant> standard_perturbations();

/// Evaluates agents trained on the unperturbed scenario under each
/// variant. Scenario labels are "<name>+<variant>".
SweepResult robustness_eval(const ScenarioConfig& scenario, const std::vector<double>& rates,
                            const std::vector<PerturbationVariant>& variants, AgentCache& agents,
                            const SweepOptions& options);

struct RobustnessDelta {
  std::string variant;
  double detection_rate = 0.0;
  std::optional<double> wait_all;
  std::optional<double> delta_vs_unperturbed;
};

std::vector<RobustnessDelta> robustness_deltas(const SweepResult& result, const std::string& base_name);

// CSV output. Numbers use the shortest text that parses back to the same
// double; empty means "no vehicles of that class".
std::string runs_csv(const SweepResult& result);
std::string summary_csv(const SweepResult& result);
std::string learning_curve_csv(const LearningCurve& curve);
std::string robustness_deltas_csv(const std::vector<RobustnessDelta>& deltas);

/// Writes `<prefix>_runs.csv` and `<prefix>_summary.csv` into `dir`.
void export_results(const SweepResult& result, const std::filesystem::path& dir, const std::string& prefix);
void write_text(const std::filesystem::path& path, const std::string& text);

std::string format_double(double v);

}  // namespace tsc
