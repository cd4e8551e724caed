// Command-line front end: training, evaluation and the experiment sweeps.

#include "tsc/agent.hpp"
#include "tsc/experiment.hpp"
#include "tsc/gradcheck.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace tsc;

namespace {

struct Globals {
  std::string scenario;  // empty: the subcommand default
  std::uint64_t seed = 1;
  int reps = 5;
  std::string out;
  std::string checkpoint;
  std::string hyperparams;
  std::uint64_t train_seed = 7;
  std::optional<int> episodes;
};

fs::path out_dir(const Globals& g) {
  if (!g.out.empty()) return g.out;
  if (const char* env = std::getenv("TSC_OUT_DIR"); env && *env) return env;
  return "results";
}

Hyperparams hyperparams(const Globals& g) {
  Hyperparams hp = g.hyperparams.empty() ? Hyperparams{} : load_hyperparams(g.hyperparams);
  if (g.episodes) hp.episodes = *g.episodes;
  hp.validate();
  return hp;
}

void log_training(AgentCache& cache) {
  cache.on_train([](const ScenarioConfig& s) {
    std::fprintf(stderr, "training agent: %s p=%g flow x%g\n", s.name.c_str(), s.arrivals.detection_rate,
                 s.flow_scale);
  });
}

// With --checkpoint DIR, sweeps reuse "<scenario>_p<rate>_f<flow>.qnet" files
// found there and save the agents they train.
class CheckpointDir {
 public:
  explicit CheckpointDir(std::string dir) : dir_(std::move(dir)) {}

  fs::path path(const ScenarioConfig& s) const {
    return fs::path(dir_) / (s.name + "_p" + format_double(s.arrivals.detection_rate) + "_f" +
                             format_double(s.flow_scale) + ".qnet");
  }

  void preload(AgentCache& cache, const ScenarioConfig& s) const {
    if (dir_.empty()) return;
    const auto p = path(s);
    if (fs::exists(p)) cache.provide(s, read_checkpoint(p, network_spec(s.road, cache.hyperparams())));
  }

  void store(AgentCache& cache, const ScenarioConfig& s) const {
    if (dir_.empty()) return;
    fs::create_directories(dir_);
    write_checkpoint(path(s), cache.get(s));
  }

 private:
  std::string dir_;
};

std::vector<double> default_rates() { return {0.0, 0.2, 0.4, 0.6, 0.8, 1.0}; }

int cmd_train(const Globals& g, std::optional<double> detection_rate) {
  ScenarioConfig s = load_scenario(g.scenario);
  if (detection_rate) s = s.with_detection_rate(*detection_rate);
  const Hyperparams hp = hyperparams(g);
  const auto trained = train_agent(s, hp, g.train_seed);
  const fs::path dir = out_dir(g);
  fs::create_directories(dir);
  const fs::path ckpt = g.checkpoint.empty() ? dir / "agent.qnet" : fs::path(g.checkpoint);
  if (ckpt.has_parent_path()) fs::create_directories(ckpt.parent_path());
  write_checkpoint(ckpt, trained.network);
  write_text(dir / "learning_curve.csv", learning_curve_csv(trained.curve));
  std::printf("checkpoint: %s\nlearning curve: %s\n", ckpt.string().c_str(),
              (dir / "learning_curve.csv").string().c_str());
  return 0;
}

int cmd_eval(const Globals& g, const std::string& controller, std::optional<double> detection_rate) {
  ScenarioConfig s = load_scenario(g.scenario);
  if (detection_rate) s = s.with_detection_rate(*detection_rate);
  const Hyperparams hp = hyperparams(g);
  Controller ctl;
  if (controller == "agent") {
    if (g.checkpoint.empty()) throw std::invalid_argument("eval --controller agent needs --checkpoint");
    ctl = agent_controller(read_checkpoint(g.checkpoint, network_spec(s.road, hp)), s.road, hp);
  } else if (controller == "pretimed") {
    ctl = pretimed_controller();
  } else {
    ctl = longest_queue_controller(hp);
  }
  SweepResult r;
  for (int j = 0; j < g.reps; ++j)
    r.rows.push_back(run_episode(s, ctl, cell_seed(g.seed, 0, static_cast<std::size_t>(j)), controller,
                                 hp.decision_interval));
  export_results(r, out_dir(g), "eval");
  std::fputs(summary_csv(r).c_str(), stdout);
  return 0;
}

SweepOptions sweep_options(const Globals& g) {
  SweepOptions o;
  o.reps = g.reps;
  o.base_seed = g.seed;
  return o;
}

int cmd_sweep_detection(const Globals& g, const std::vector<double>& rates, bool longest_queue) {
  const ScenarioConfig s = load_scenario(g.scenario);
  AgentCache cache(hyperparams(g), g.train_seed);
  log_training(cache);
  const CheckpointDir ckpt(g.checkpoint);
  for (double p : rates) ckpt.preload(cache, s.with_detection_rate(p));
  SweepOptions o = sweep_options(g);
  o.include_longest_queue = longest_queue;
  const auto r = sweep_detection_rate(s, rates, cache, o);
  for (double p : rates) ckpt.store(cache, s.with_detection_rate(p));
  export_results(r, out_dir(g), "detection");
  std::fputs(summary_csv(r).c_str(), stdout);
  return 0;
}

int cmd_sweep_sensitivity(const Globals& g, const std::string& axis_name, double train_value,
                          const std::vector<double>& values) {
  const ScenarioConfig s = load_scenario(g.scenario);
  const SensitivityAxis axis = axis_name == "flow" ? SensitivityAxis::Flow : SensitivityAxis::DetectionRate;
  auto at = [&](double v) { return axis == SensitivityAxis::Flow ? s.with_flow_scale(v) : s.with_detection_rate(v); };
  AgentCache cache(hyperparams(g), g.train_seed);
  log_training(cache);
  const CheckpointDir ckpt(g.checkpoint);
  ckpt.preload(cache, at(train_value));
  for (double v : values) ckpt.preload(cache, at(v));
  const auto r = sensitivity_sweep(s, axis, train_value, values, cache, sweep_options(g));
  ckpt.store(cache, at(train_value));
  for (double v : values) ckpt.store(cache, at(v));
  export_results(r, out_dir(g), "sensitivity_" + axis_name);
  std::fputs(summary_csv(r).c_str(), stdout);
  return 0;
}

int cmd_whole_day(Globals g, const std::vector<double>& rates) {
  if (g.scenario.empty()) g.scenario = "day";
  const ScenarioConfig s = load_scenario(g.scenario);
  AgentCache cache(hyperparams(g), g.train_seed);
  log_training(cache);
  const CheckpointDir ckpt(g.checkpoint);
  for (double p : rates) ckpt.preload(cache, s.with_detection_rate(p));
  const auto r = whole_day_eval(s, rates, cache, sweep_options(g));
  for (double p : rates) ckpt.store(cache, s.with_detection_rate(p));
  export_results(r, out_dir(g), "whole_day");
  std::printf("wrote %s\n", (out_dir(g) / "whole_day_summary.csv").string().c_str());
  return 0;
}

int cmd_robustness(const Globals& g, const std::vector<double>& rates) {
  const ScenarioConfig s = load_scenario(g.scenario).with_perturbations({});
  AgentCache cache(hyperparams(g), g.train_seed);
  log_training(cache);
  const CheckpointDir ckpt(g.checkpoint);
  for (double p : rates) ckpt.preload(cache, s.with_detection_rate(p));
  const auto r = robustness_eval(s, rates, standard_perturbations(), cache, sweep_options(g));
  for (double p : rates) ckpt.store(cache, s.with_detection_rate(p));
  export_results(r, out_dir(g), "robustness");
  const auto deltas = robustness_deltas_csv(robustness_deltas(r, s.name));
  write_text(out_dir(g) / "robustness_deltas.csv", deltas);
  std::fputs(deltas.c_str(), stdout);
  return 0;
}

int cmd_gradcheck(const Globals& g, int trials) {
  const auto report = random_gradient_check(trials, g.seed);
  std::printf("max relative gradient error: %.3e over %zu entries (%d nets, %zu kink-straddling skipped)\n",
              report.max_relative_error, report.entries_checked, report.trials, report.kink_skipped);
  return report.max_relative_error < 1e-4 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Traffic signal control with partially detected vehicles"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--scenario", g.scenario, "Scenario file or built-in name: sparse, medium (default), dense, uniform, day");
  app.add_option("--seed", g.seed, "Base evaluation seed");
  app.add_option("--reps", g.reps, "Replications per cell")->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "Output directory (default $TSC_OUT_DIR, else ./results)");
  app.add_option("--checkpoint", g.checkpoint, "Checkpoint file (train/eval) or directory (sweeps)");
  app.add_option("--hyperparams", g.hyperparams, "Hyperparameter JSON file");
  app.add_option("--train-seed", g.train_seed, "Agent training seed");
  app.add_option("--episodes", g.episodes, "Override the number of training episodes")->check(CLI::PositiveNumber);

  std::optional<double> detection_rate;
  auto* train = app.add_subcommand("train", "Train an agent; writes a checkpoint and learning_curve.csv");
  train->add_option("--detection-rate", detection_rate)->check(CLI::Range(0.0, 1.0));

  std::string controller = "agent";
  auto* eval = app.add_subcommand("eval", "Evaluate one controller over --reps seeds");
  eval->add_option("--controller", controller)->check(CLI::IsMember({"agent", "pretimed", "longest_queue"}));
  eval->add_option("--detection-rate", detection_rate)->check(CLI::Range(0.0, 1.0));

  std::vector<double> rates = default_rates();
  bool longest_queue = false;
  auto* sweep_det = app.add_subcommand("sweep-detection", "Per-rate agents vs pre-timed over detection rates");
  sweep_det->add_option("--rates", rates)->delimiter(',')->check(CLI::Range(0.0, 1.0));
  sweep_det->add_flag("--longest-queue", longest_queue, "Also run the longest-queue reference controller");

  std::string axis = "flow";
  double train_value = 1.0;
  std::vector<double> values = {0.0, 0.5, 1.0, 1.5};
  auto* sweep_sens = app.add_subcommand("sweep-sensitivity", "Fixed vs per-point agents along one axis");
  sweep_sens->add_option("--axis", axis)->check(CLI::IsMember({"flow", "detection_rate"}));
  sweep_sens->add_option("--train-value", train_value, "Training flow scale or detection rate");
  sweep_sens->add_option("--values", values, "Evaluation flow scales or detection rates")->delimiter(',');

  std::vector<double> day_rates = {0.2, 1.0};
  auto* day = app.add_subcommand("whole-day", "24 h runs binned by hour (default scenario: day)");
  day->add_option("--rates", day_rates)->delimiter(',')->check(CLI::Range(0.0, 1.0));

  std::vector<double> robust_rates = default_rates();
  auto* robust = app.add_subcommand("robustness", "Unperturbed agents under perturbed simulation variants");
  robust->add_option("--rates", robust_rates)->delimiter(',')->check(CLI::Range(0.0, 1.0));

  int trials = 100;
  auto* grad = app.add_subcommand("gradcheck", "Finite-difference check of backpropagation");
  grad->add_option("--trials", trials)->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (g.scenario.empty() && !*day) g.scenario = "medium";
    if (*train) return cmd_train(g, detection_rate);
    if (*eval) return cmd_eval(g, controller, detection_rate);
    if (*sweep_det) return cmd_sweep_detection(g, rates, longest_queue);
    if (*sweep_sens) {
      if (axis == "detection_rate" && !sweep_sens->count("--train-value")) train_value = 0.2;
      if (axis == "detection_rate" && !sweep_sens->count("--values")) values = {0.1, 0.2, 0.3, 0.4};
      return cmd_sweep_sensitivity(g, axis, train_value, values);
    }
    if (*day) return cmd_whole_day(g, day_rates);
    if (*robust) return cmd_robustness(g, robust_rates);
    if (*grad) return cmd_gradcheck(g, trials);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
