#pragma once

#include "tsc/agent.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

namespace tsc::toy {

// Two states, two actions; action a moves the system to state a.
inline constexpr std::array<std::array<double, 2>, 2> kReward = {{{-0.5, -1.0}, {-0.2, 0.0}}};

using QTable = std::array<std::array<double, 2>, 2>;

inline QTable value_iteration(double gamma) {
  QTable q{};
  for (int it = 0; it < 10000; ++it) {
    QTable next{};
    for (int s = 0; s < 2; ++s)
      for (int a = 0; a < 2; ++a) next[s][a] = kReward[s][a] + gamma * std::max(q[a][0], q[a][1]);
    q = next;
  }
  return q;
}

inline Vector<double> one_hot(int s) {
  Vector<double> x = Vector<double>::Zero(2);
  x(s) = 1.0;
  return x;
}

struct ToyResult {
  QTable learned{};
  QTable optimal{};
  double max_error = 0.0;
  bool policy_matches = false;
};

// Runs the DQN machinery (replay buffer, target network, Adam, epsilon-greedy
// behaviour) on the toy system and compares against value iteration.
inline ToyResult run_toy_dqn(double gamma, std::uint64_t seed, int steps = 30000) {
  Hyperparams hp;
  hp.gamma = gamma;
  hp.batch_size = 32;
  hp.buffer_capacity = 5000;
  hp.target_sync_interval = 200;
  hp.hidden = {16};
  std::mt19937_64 rng(seed);
  const MlpSpec spec{{2, 16, 2}};
  QNetwork online = init_network<double>(spec, rng);
  QNetwork target = online;
  auto adam = make_adam<double>(spec, hp.adam);
  ReplayBuffer buffer(hp.buffer_capacity);

  int s = 0;
  for (int t = 1; t <= steps; ++t) {
    const Action a = select_action(one_hot(s), target, 1.0, rng);
    const int next = static_cast<int>(a);
    buffer.push({one_hot(s), a, kReward[s][next], one_hot(next), false});
    train_step(online, target, buffer, hp, adam, rng);
    if (t % hp.target_sync_interval == 0) sync_target(online, target);
    s = next;
  }

  ToyResult r;
  r.optimal = value_iteration(gamma);
  r.policy_matches = true;
  for (int st = 0; st < 2; ++st) {
    const Vector<double> q = forward(online, one_hot(st));
    for (int a = 0; a < 2; ++a) {
      r.learned[st][a] = q(a);
      r.max_error = std::max(r.max_error, std::abs(q(a) - r.optimal[st][a]));
    }
    const int best = r.optimal[st][1] > r.optimal[st][0] ? 1 : 0;
    r.policy_matches &= static_cast<int>(greedy_action(q)) == best;
  }
  return r;
}

}  // namespace tsc::toy
