#pragma once

#include "tsc/checkpoint.hpp"
#include "tsc/episode.hpp"
#include "tsc/mlp.hpp"
#include "tsc/scenario.hpp"
#include "tsc/sim.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace tsc {

/// How the signal state enters the observation. `Sign` negates the
/// per-approach entries of red approaches; `Indicator` keeps them unsigned
/// and appends a 0/1 "N/S group has the right of way" input.
enum class PhaseEncoding { Sign, Indicator };

/// What validation episodes score: mean delay per vehicle (time queued
/// before entering the lane plus time stopped on it; lower is better) or
/// mean training reward.
enum class Selection { Delay, Reward };

struct Hyperparams {
  double gamma = 0.95;
  AdamConfig adam;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  double epsilon_decay_fraction = 0.5;  // of all training decisions
  int batch_size = 32;
  std::size_t buffer_capacity = 50000;
  int target_sync_interval = 500;  // decisions
  double decision_interval = 1.0;  // s
  double min_phase = 5.0;          // s
  double max_phase = 60.0;         // s
  int episodes = 30;
  double episode_seconds = 1800.0;  // training episode length; 0 = scenario length
  // Greedy validation episodes run after each training episode once
  // exploration has decayed; the best-scoring network is returned. 0 = off.
  int validation_episodes = 2;
  // Independent training runs from different seeds; the one with the best
  // validation score is kept. Needs validation when > 1.
  int restarts = 3;
  Selection selection = Selection::Delay;
  // Clamp TD targets to the range of attainable returns; stops the
  // bootstrap from drifting to values no policy can reach.
  bool clamp_targets = true;
  std::vector<int> hidden = {64, 64};
  PhaseEncoding encoding = PhaseEncoding::Sign;

  void validate() const;
  bool operator==(const Hyperparams&) const = default;
};

/// Reads the JSON hyperparameter schema; absent keys keep their defaults.
Hyperparams parse_hyperparams(std::string_view text);
Hyperparams load_hyperparams(const std::string& path);

/// Encoded detector state in physical units:
///   per approach: detected count, distance to nearest detected vehicle (m)
///   phase elapsed (s), amber flag, time of day in [0, 1)
///   [Indicator encoding only] N/S right-of-way flag
using Observation = Vector<double>;

int observation_size(int approach_count, PhaseEncoding encoding = PhaseEncoding::Sign);

Observation encode_observation(const RawDetection& raw, double lane_length,
                               PhaseEncoding encoding = PhaseEncoding::Sign);

/// Per-entry factors mapping an Observation to network input: counts / 10,
/// distances / lane_length, elapsed / max_phase, flags unchanged.
Vector<double> input_scale(const RoadParams& road, const Hyperparams& hp);

MlpSpec network_spec(const RoadParams& road, const Hyperparams& hp);

/// Greedy action; ties go to Keep.
Action greedy_action(const Vector<double>& q);

/// Epsilon-greedy over forward(net, input).
Action select_action(const Vector<double>& input, const QNetwork& net, double epsilon, std::mt19937_64& rng);

/// Mandatory green bounds. Amber always keeps.
Action apply_phase_guard(Action proposed, const SignalPhase& phase, const Hyperparams& hp);

/// One decision interval of experience. States are network inputs (scaled
/// observations).
struct Transition {
  Vector<double> state;
  Action action = Action::Keep;
  double reward = 0.0;
  Vector<double> next_state;
  bool terminal = false;
};

/// Fixed-capacity FIFO ring; index 0 is the oldest stored transition.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return data_.size(); }
  const Transition& operator[](std::size_t i) const;

  /// `count` indices drawn uniformly with replacement.
  std::vector<std::size_t> sample_indices(std::size_t count, std::mt19937_64& rng) const;

 private:
  std::vector<Transition> data_;
  std::size_t head_ = 0;  // next write slot
  std::size_t size_ = 0;
};

/// r + gamma * max_a Q_target(s', a), or r alone for terminal transitions.
Vector<double> compute_td_targets(const std::vector<const Transition*>& batch, const QNetwork& target,
                                  double gamma);

/// One minibatch Adam step on `online` against targets from `target`.
/// Returns nullopt (and changes nothing) while the buffer holds fewer than
/// batch_size transitions.
std::optional<double> train_step(QNetwork& online, const QNetwork& target, const ReplayBuffer& buffer,
                                 const Hyperparams& hp, AdamState<double>& adam, std::mt19937_64& rng);

/// target <- online, bitwise.
void sync_target(const QNetwork& online, QNetwork& target);

/// Linear decay from epsilon_start to epsilon_end over the first
/// epsilon_decay_fraction of `total_decisions`.
double epsilon_at(long decision, long total_decisions, const Hyperparams& hp);

struct LearningCurvePoint {
  int episode = 0;
  double mean_penalty = 0.0;  // mean of -reward over the episode's decisions
  double epsilon = 0.0;       // at the end of the episode
};
using LearningCurve = std::vector<LearningCurvePoint>;

struct TrainedAgent {
  QNetwork network;
  LearningCurve curve;
  std::optional<double> validation_score;  // higher is better: -delay or mean reward
};

/// Called after each decision with the stored transition.
using TransitionObserver = std::function<void(const Transition&, const WorldState&)>;

/// DQN training against the simulator. Decisions use the target network
/// with epsilon-greedy exploration and the phase guard; the online network
/// is trained every decision and copied to the target every
/// target_sync_interval decisions. Time-varying scenarios start each
/// episode at a random whole hour. With validation enabled the returned
/// network is the one that scores best on fixed validation seeds over all
/// restarts, else the final online network. The curve belongs to the run that produced the network.
TrainedAgent train_agent(const ScenarioConfig& scenario, const Hyperparams& hp, std::uint64_t seed,
                         const TransitionObserver& observer = {});

/// Frozen greedy policy plus phase guard as a controller.
Controller agent_controller(QNetwork net, const RoadParams& road, const Hyperparams& hp);

/// Evaluates a frozen network for one episode; no learning happens.
MetricsRecord deploy_agent(const QNetwork& net, const ScenarioConfig& scenario, std::uint64_t seed,
                           const Hyperparams& hp = {});

}  // namespace tsc
