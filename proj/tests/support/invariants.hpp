#pragma once

#include "tsc/sim.hpp"

#include <cstdint>
#include <random>
#include <string>

namespace tsc::fuzz {

struct FuzzTally {
  std::uint64_t steps = 0;
  std::uint64_t collisions = 0;
  std::uint64_t red_crossings = 0;
  std::uint64_t conservation_breaks = 0;
  std::uint64_t reward_out_of_range = 0;

  bool clean() const { return collisions + red_crossings + conservation_breaks + reward_out_of_range == 0; }
};

// Steps `world` with random commands and checks every tick: ordering and
// spacing within each lane, departures only from approaches that had green
// during the tick, generated = pending + present + departed, reward in [-1, 0].
inline void fuzz_world(WorldState& world, std::uint64_t steps, std::mt19937_64& rng, double switch_prob,
                       FuzzTally& tally) {
  const auto& p = world.params;
  const double spacing = p.vehicle_length + p.min_gap;
  std::bernoulli_distribution flip(switch_prob);
  for (std::uint64_t s = 0; s < steps; ++s) {
    const Action cmd = flip(rng) ? Action::Switch : Action::Keep;
    SignalPhase during = world.phase;
    if (cmd == Action::Switch && during.is_green())
      during.id = during.id == PhaseId::NsGreen ? PhaseId::NsAmber : PhaseId::EwAmber;
    const StepStats st = step_simulation(world, cmd, p.sim_dt);
    ++tally.steps;

    for (const auto& v : st.departed)
      if (!during.has_green(v.approach)) ++tally.red_crossings;
    for (const auto& lane : world.lanes)
      for (std::size_t i = 0; i < lane.size(); ++i) {
        if (lane[i].position > p.lane_length + 1e-9 || lane[i].position < -1e-9) ++tally.collisions;
        if (i > 0 && lane[i - 1].position - lane[i].position < spacing - 1e-9) ++tally.collisions;
      }
    if (world.generated != world.waiting_for_entry() + world.present() + world.departed ||
        world.spawned != world.present() + world.departed)
      ++tally.conservation_breaks;
    if (!(st.reward >= -1.0 && st.reward <= 0.0)) ++tally.reward_out_of_range;
  }
}

}  // namespace tsc::fuzz
