#include "tsc/agent.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace tsc {

void Hyperparams::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(ConfigError::Kind::Schema, "hyperparams: " + msg); };
  if (!(gamma > 0.0 && gamma < 1.0)) fail("gamma must lie in (0, 1)");
  if (!(adam.learning_rate > 0.0)) fail("learning_rate must be > 0");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0))
    fail("Adam betas must lie in [0, 1)");
  if (!(adam.epsilon > 0.0)) fail("adam_epsilon must be > 0");
  if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0) || !(epsilon_end >= 0.0 && epsilon_end <= 1.0))
    fail("exploration epsilons must lie in [0, 1]");
  if (!(epsilon_decay_fraction >= 0.0 && epsilon_decay_fraction <= 1.0))
    fail("epsilon_decay_fraction must lie in [0, 1]");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (buffer_capacity < static_cast<std::size_t>(batch_size)) fail("batch_size must not exceed buffer_capacity");
  if (target_sync_interval < 1) fail("target_sync_interval must be >= 1");
  if (!(decision_interval > 0.0)) fail("decision_interval must be > 0");
  if (!(min_phase >= 0.0) || !(min_phase < max_phase)) fail("need 0 <= min_phase < max_phase");
  if (episodes < 1) fail("episodes must be >= 1");
  if (validation_episodes < 0) fail("validation_episodes must be >= 0");
  if (restarts < 1) fail("restarts must be >= 1");
  if (restarts > 1 && validation_episodes == 0) fail("restarts > 1 needs validation_episodes >= 1");
  if (episode_seconds < 0.0) fail("episode_seconds must be >= 0");
  for (int h : hidden)
    if (h < 1) fail("hidden widths must be >= 1");
}

int observation_size(int approach_count, PhaseEncoding encoding) {
  return 2 * approach_count + 3 + (encoding == PhaseEncoding::Indicator ? 1 : 0);
}

Observation encode_observation(const RawDetection& raw, double lane_length, PhaseEncoding encoding) {
  const int n = static_cast<int>(raw.detected_count.size());
  Observation obs = Observation::Zero(observation_size(n, encoding));
  for (int a = 0; a < n; ++a) {
    const double sign = (encoding == PhaseEncoding::Sign && !raw.phase.serves(a)) ? -1.0 : 1.0;
    const double distance = std::min(raw.nearest_distance[static_cast<std::size_t>(a)], lane_length);
    obs(2 * a) = sign * raw.detected_count[static_cast<std::size_t>(a)];
    obs(2 * a + 1) = sign * distance;
  }
  obs(2 * n) = raw.phase.elapsed;
  obs(2 * n + 1) = raw.amber() ? 1.0 : 0.0;
  obs(2 * n + 2) = std::fmod(std::max(raw.clock, 0.0), 86400.0) / 86400.0;
  if (encoding == PhaseEncoding::Indicator) obs(2 * n + 3) = raw.phase.served_group() == 0 ? 1.0 : 0.0;
  return obs;
}

Vector<double> input_scale(const RoadParams& road, const Hyperparams& hp) {
  const int n = road.approach_count;
  Vector<double> s = Vector<double>::Ones(observation_size(n, hp.encoding));
  for (int a = 0; a < n; ++a) {
    s(2 * a) = 0.1;
    s(2 * a + 1) = 1.0 / road.lane_length;
  }
  s(2 * n) = 1.0 / hp.max_phase;
  return s;
}

MlpSpec network_spec(const RoadParams& road, const Hyperparams& hp) {
  MlpSpec spec{{observation_size(road.approach_count, hp.encoding)}};
  spec.layer_dims.insert(spec.layer_dims.end(), hp.hidden.begin(), hp.hidden.end());
  spec.layer_dims.push_back(kActionCount);
  return spec;
}

Action greedy_action(const Vector<double>& q) {
  return q(1) > q(0) ? Action::Switch : Action::Keep;
}

Action select_action(const Vector<double>& input, const QNetwork& net, double epsilon, std::mt19937_64& rng) {
  if (epsilon > 0.0 && std::uniform_real_distribution<double>(0.0, 1.0)(rng) < epsilon)
    return std::uniform_int_distribution<int>(0, kActionCount - 1)(rng) == 0 ? Action::Keep : Action::Switch;
  return greedy_action(forward(net, input));
}

Action apply_phase_guard(Action proposed, const SignalPhase& phase, const Hyperparams& hp) {
  if (phase.is_amber()) return Action::Keep;
  if (phase.elapsed < hp.min_phase - 1e-9) return Action::Keep;
  if (phase.elapsed >= hp.max_phase - 1e-9) return Action::Switch;
  return proposed;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) {
  if (capacity == 0) throw std::invalid_argument("replay buffer capacity must be >= 1");
  data_.resize(capacity);
}

void ReplayBuffer::push(Transition t) {
  data_[head_] = std::move(t);
  head_ = (head_ + 1) % data_.size();
  if (size_ < data_.size()) ++size_;
}

const Transition& ReplayBuffer::operator[](std::size_t i) const {
  if (i >= size_) throw std::out_of_range("replay buffer index out of range");
  const std::size_t oldest = (head_ + data_.size() - size_) % data_.size();
  return data_[(oldest + i) % data_.size()];
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t count, std::mt19937_64& rng) const {
  if (size_ == 0) throw std::logic_error("sampling from an empty replay buffer");
  std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
  std::vector<std::size_t> out(count);
  for (auto& i : out) i = pick(rng);
  return out;
}

Vector<double> compute_td_targets(const std::vector<const Transition*>& batch, const QNetwork& target,
                                  double gamma) {
  if (batch.empty()) throw std::invalid_argument("compute_td_targets: empty batch");
  const Eigen::Index n = static_cast<Eigen::Index>(batch.size());
  Matrix<double> next(target.spec.input_dim(), n);
  for (Eigen::Index i = 0; i < n; ++i) next.col(i) = batch[static_cast<std::size_t>(i)]->next_state;
  const Matrix<double> q_next = forward_batch(target, next);
  Vector<double> y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Transition& t = *batch[static_cast<std::size_t>(i)];
    y(i) = t.terminal ? t.reward : t.reward + gamma * q_next.col(i).maxCoeff();
  }
  return y;
}

std::optional<double> train_step(QNetwork& online, const QNetwork& target, const ReplayBuffer& buffer,
                                 const Hyperparams& hp, AdamState<double>& adam, std::mt19937_64& rng) {
  const auto batch_size = static_cast<std::size_t>(hp.batch_size);
  if (buffer.size() < batch_size) return std::nullopt;

  std::vector<const Transition*> batch;
  batch.reserve(batch_size);
  for (std::size_t i : buffer.sample_indices(batch_size, rng)) batch.push_back(&buffer[i]);

  Vector<double> y = compute_td_targets(batch, target, hp.gamma);
  Matrix<double> states(online.spec.input_dim(), static_cast<Eigen::Index>(batch_size));
  std::vector<int> actions(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) {
    states.col(static_cast<Eigen::Index>(i)) = batch[i]->state;
    actions[i] = static_cast<int>(batch[i]->action);
  }
  // rewards lie in [-1, 0], so every return lies in [-1 / (1 - gamma), 0]
  if (hp.clamp_targets) y = y.cwiseMax(-1.0 / (1.0 - hp.gamma)).cwiseMin(0.0);
  QNetwork grad;
  const double loss =
      backward_batch<double>(online, states, actions, std::span<const double>(y.data(), batch_size), grad);
  adam_step(online, grad, adam);
  return loss;
}

void sync_target(const QNetwork& online, QNetwork& target) {
  if (online.spec != target.spec) throw std::invalid_argument("sync_target: network specs differ");
  target = online;
}

double epsilon_at(long decision, long total_decisions, const Hyperparams& hp) {
  const double horizon = hp.epsilon_decay_fraction * static_cast<double>(total_decisions);
  if (horizon <= 0.0 || static_cast<double>(decision) >= horizon) return hp.epsilon_end;
  const double frac = static_cast<double>(decision) / horizon;
  return hp.epsilon_start + frac * (hp.epsilon_end - hp.epsilon_start);
}

namespace {

using ValidationSet = std::vector<std::pair<std::uint64_t, double>>;

// Vehicles still queued or on the lane at the end count with the delay
// accrued so far, so a policy cannot look good by holding traffic back.
std::pair<double, std::size_t> total_delay(const Episode& ep, double from) {
  double sum = 0.0;
  std::size_t n = 0;
  const WorldState& w = ep.world();
  auto add = [&](const Vehicle& v, double d) {
    if (v.spawn_time < from) return;
    sum += d;
    ++n;
  };
  for (const auto& v : ep.departed()) add(v, v.entry_time - v.spawn_time + v.accumulated_wait);
  for (const auto& lane : w.lanes)
    for (const auto& v : lane) add(v, v.entry_time - v.spawn_time + v.accumulated_wait);
  for (const auto& queue : w.pending)
    for (const auto& v : queue) add(v, w.clock - v.spawn_time);
  return {sum, n};
}

struct Run {
  TrainedAgent agent;
  double score = -std::numeric_limits<double>::infinity();
};

Run train_once(const ScenarioConfig& scenario, const Hyperparams& hp, std::uint64_t seed,
               const ValidationSet& validation, const TransitionObserver& observer) {
  std::mt19937_64 rng(seed);
  const MlpSpec spec = network_spec(scenario.road, hp);
  QNetwork online = init_network<double>(spec, rng);
  QNetwork target = init_network<double>(spec, rng);
  AdamState<double> adam = make_adam<double>(spec, hp.adam);
  ReplayBuffer buffer(hp.buffer_capacity);
  const Vector<double> scale = input_scale(scenario.road, hp);
  const double lane = scenario.road.lane_length;

  const double length = hp.episode_seconds > 0.0 ? hp.episode_seconds : scenario.episode_length;
  const long per_episode = std::lround(length / hp.decision_interval);
  const long total = per_episode * hp.episodes;
  std::uniform_int_distribution<int> start_hour(0, 23);

  auto validate = [&](const QNetwork& net) {
    const Controller ctl = agent_controller(net, scenario.road, hp);
    double reward = 0.0, delay = 0.0;
    long decisions = 0;
    std::size_t vehicles = 0;
    for (const auto& [vseed, vstart] : validation) {
      Episode ep(scenario, vseed, hp.decision_interval, vstart, length);
      while (!ep.done()) {
        reward += ep.advance(ctl(ep.world()));
        ++decisions;
      }
      const auto [d, n] = total_delay(ep, ep.start_time() + scenario.warmup);
      delay += d;
      vehicles += n;
    }
    if (hp.selection == Selection::Delay) return vehicles ? -delay / static_cast<double>(vehicles) : 0.0;
    return decisions ? reward / static_cast<double>(decisions) : 0.0;
  };
  std::optional<QNetwork> best;

  Run out;
  long decision = 0;
  for (int e = 0; e < hp.episodes; ++e) {
    const double start = scenario.time_varying() ? 3600.0 * start_hour(rng) : scenario.start_time;
    Episode episode(scenario, rng(), hp.decision_interval, start, length);
    auto observe = [&] {
      return Vector<double>(scale.cwiseProduct(encode_observation(measure_state(episode.world()), lane, hp.encoding)));
    };
    Vector<double> state = observe();
    double penalty = 0.0;
    long steps = 0;
    double eps = hp.epsilon_start;
    while (!episode.done()) {
      eps = epsilon_at(decision, total, hp);
      const Action proposed = select_action(state, target, eps, rng);
      const Action action = apply_phase_guard(proposed, episode.world().phase, hp);
      const double reward = episode.advance(action);
      Transition t{state, action, reward, observe(), episode.done()};
      if (observer) observer(t, episode.world());
      state = t.next_state;
      buffer.push(std::move(t));
      train_step(online, target, buffer, hp, adam, rng);
      ++decision;
      if (decision % hp.target_sync_interval == 0) sync_target(online, target);
      penalty -= reward;
      ++steps;
    }
    out.agent.curve.push_back({e, steps ? penalty / static_cast<double>(steps) : 0.0, eps});
    if (!validation.empty() && eps <= hp.epsilon_end) {
      const double score = validate(online);
      if (score > out.score) {
        out.score = score;
        best = online;
      }
    }
  }
  out.agent.network = best ? std::move(*best) : std::move(online);
  if (best) out.agent.validation_score = out.score;
  return out;
}

}  // namespace

TrainedAgent train_agent(const ScenarioConfig& scenario, const Hyperparams& hp, std::uint64_t seed,
                         const TransitionObserver& observer) {
  hp.validate();
  scenario.validate();
  std::mt19937_64 rng(seed);

  // validation seeds and start hours are fixed up front so every candidate
  // network, across restarts too, is scored on the same traffic
  std::uniform_int_distribution<int> start_hour(0, 23);
  ValidationSet validation;
  for (int v = 0; v < hp.validation_episodes; ++v) {
    const std::uint64_t vseed = rng();
    const double start = scenario.time_varying() ? 3600.0 * start_hour(rng) : scenario.start_time;
    validation.emplace_back(vseed, start);
  }

  Run best;
  for (int r = 0; r < hp.restarts; ++r) {
    Run run = train_once(scenario, hp, rng(), validation, observer);
    if (r == 0 || run.score > best.score) best = std::move(run);
  }
  return std::move(best.agent);
}

Controller agent_controller(QNetwork net, const RoadParams& road, const Hyperparams& hp) {
  if (net.spec.input_dim() != observation_size(road.approach_count, hp.encoding) ||
      net.spec.output_dim() != kActionCount)
    throw std::invalid_argument("network " + to_string(net.spec) + " does not fit the observation layout");
  const Vector<double> scale = input_scale(road, hp);
  return [net = std::move(net), scale, hp, lane = road.lane_length](const WorldState& w) {
    const Observation obs = encode_observation(measure_state(w), lane, hp.encoding);
    const Action greedy = greedy_action(forward(net, Vector<double>(scale.cwiseProduct(obs))));
    return apply_phase_guard(greedy, w.phase, hp);
  };
}

MetricsRecord deploy_agent(const QNetwork& net, const ScenarioConfig& scenario, std::uint64_t seed,
                           const Hyperparams& hp) {
  MetricsRecord m = run_controller(scenario, agent_controller(net, scenario.road, hp), seed, hp.decision_interval);
  m.controller = "agent";
  return m;
}

}  // namespace tsc
