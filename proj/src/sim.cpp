#include "tsc/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tsc {

const char* to_string(Action a) { return a == Action::Keep ? "keep" : "switch"; }

const char* to_string(PhaseId id) {
  switch (id) {
    case PhaseId::NsGreen: return "ns_green";
    case PhaseId::NsAmber: return "ns_amber";
    case PhaseId::EwGreen: return "ew_green";
    case PhaseId::EwAmber: return "ew_amber";
  }
  return "?";
}

void RoadParams::validate() const {
  if (approach_count < 2 || approach_count % 2 != 0)
    throw std::invalid_argument("approach_count must be a positive even number");
  const double positive[] = {lane_length, v_max, accel, decel, tau, vehicle_length,
                             min_gap, sim_dt, amber_duration, wait_speed_threshold};
  for (double v : positive)
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("road parameters must be positive and finite");
  if (sim_dt > tau) throw std::invalid_argument("sim_dt must not exceed tau");
}

double RateProfile::at(double clock) const {
  if (hourly.empty()) return 0.0;
  if (hourly.size() == 1) return std::max(0.0, hourly[0]);
  const double day = std::fmod(std::max(0.0, clock), 86400.0);
  const auto hour = std::min<std::size_t>(static_cast<std::size_t>(day / 3600.0), hourly.size() - 1);
  return std::max(0.0, hourly[hour]);
}

double RateProfile::peak() const {
  return hourly.empty() ? 0.0 : *std::max_element(hourly.begin(), hourly.end());
}

void ArrivalSpec::validate(int approach_count) const {
  if (static_cast<int>(rates.size()) != approach_count)
    throw std::invalid_argument("arrival spec needs one rate profile per approach");
  for (const auto& r : rates) {
    if (r.hourly.size() != 1 && r.hourly.size() != 24)
      throw std::invalid_argument("rate profile must have 1 or 24 entries");
    for (double v : r.hourly)
      if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("arrival rates must be finite and >= 0");
  }
  if (!(detection_rate >= 0.0 && detection_rate <= 1.0))
    throw std::invalid_argument("detection rate must lie in [0, 1]");
}

std::size_t WorldState::present() const {
  std::size_t n = 0;
  for (const auto& lane : lanes) n += lane.size();
  return n;
}

std::size_t WorldState::waiting_for_entry() const {
  std::size_t n = 0;
  for (const auto& q : pending) n += q.size();
  return n;
}

WorldState make_world(const RoadParams& params, const ArrivalSpec& arrivals, std::uint64_t seed,
                      double start_clock, const Perturbations& perturbations) {
  params.validate();
  arrivals.validate(params.approach_count);
  if (perturbations.bulk_mean_size < 1.0 || perturbations.speed_noise_sigma < 0.0)
    throw std::invalid_argument("invalid perturbation settings");
  WorldState w;
  w.params = params;
  w.arrivals = arrivals;
  w.perturbations = perturbations;
  w.clock = start_clock;
  w.lanes.resize(static_cast<std::size_t>(params.approach_count));
  w.pending.resize(static_cast<std::size_t>(params.approach_count));
  w.rng.seed(seed);
  return w;
}

std::vector<Vehicle> generate_arrivals(const ArrivalSpec& spec, const RoadParams& params,
                                       const Perturbations& perturbations, double clock, double dt,
                                       std::mt19937_64& rng, std::uint64_t& next_id) {
  std::vector<Vehicle> out;
  std::bernoulli_distribution detect(std::clamp(spec.detection_rate, 0.0, 1.0));
  const bool bulk = perturbations.bulk_mean_size > 1.0;

  for (int a = 0; a < static_cast<int>(spec.rates.size()); ++a) {
    const double rate = spec.rates[static_cast<std::size_t>(a)].at(clock);
    if (!(rate > 0.0)) continue;
    const double events_mean = rate * dt / (bulk ? perturbations.bulk_mean_size : 1.0);
    const int events = std::poisson_distribution<int>(events_mean)(rng);
    for (int e = 0; e < events; ++e) {
      // batch size 1 + Poisson(mean - 1) keeps the offered volume unchanged
      const int size = bulk ? 1 + std::poisson_distribution<int>(perturbations.bulk_mean_size - 1.0)(rng) : 1;
      for (int k = 0; k < size; ++k) {
        Vehicle v;
        v.id = next_id++;
        v.approach = a;
        v.detected = detect(rng);
        v.spawn_time = clock;
        v.desired_speed = params.v_max;
        if (perturbations.speed_noise_sigma > 0.0) {
          // half-normal slowdown, truncated so nobody crawls below v_max / 2
          std::normal_distribution<double> noise(0.0, perturbations.speed_noise_sigma);
          double factor;
          do {
            factor = 1.0 - std::abs(noise(rng));
          } while (factor < 0.5);
          v.desired_speed = params.v_max * factor;
        }
        if (perturbations.midlane_spawn)
          v.position = std::uniform_real_distribution<double>(0.0, 0.5 * params.lane_length)(rng);
        out.push_back(v);
      }
    }
  }
  return out;
}

double compute_target_speed(double v, double gap, double leader_speed, const RoadParams& p,
                            double desired_speed) {
  const double desired = desired_speed > 0.0 ? std::min(desired_speed, p.v_max) : p.v_max;
  const double bt = p.decel * p.tau;
  const double safe = std::isinf(gap)
                          ? std::numeric_limits<double>::infinity()
                          : -bt + std::sqrt(bt * bt + leader_speed * leader_speed + 2.0 * p.decel * std::max(gap, 0.0));
  return std::max(0.0, std::min({v + p.accel * p.sim_dt, desired, safe}));
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Places as many pending vehicles as fit; order within an approach is kept.
void insert_pending(WorldState& w, double now) {
  const auto& p = w.params;
  const double spacing = p.vehicle_length + p.min_gap;
  for (std::size_t a = 0; a < w.lanes.size(); ++a) {
    auto& lane = w.lanes[a];
    auto& queue = w.pending[a];
    for (auto it = queue.begin(); it != queue.end();) {
      Vehicle v = *it;
      // first vehicle ahead of the spawn point (lane is sorted descending)
      auto ahead_end = std::find_if(lane.begin(), lane.end(), [&](const Vehicle& o) { return o.position < v.position; });
      const bool has_leader = ahead_end != lane.begin();
      const bool has_follower = ahead_end != lane.end();
      double gap = kInf, leader_speed = 0.0;
      if (has_leader) {
        const Vehicle& leader = *std::prev(ahead_end);
        gap = leader.position - spacing - v.position;
      } else if (!w.phase.has_green(static_cast<int>(a))) {
        gap = p.lane_length - v.position;
      }
      if (has_leader) leader_speed = std::prev(ahead_end)->speed;
      const bool fits = gap >= 0.0 && (!has_follower || v.position - ahead_end->position >= spacing);
      if (!fits) {
        // all vehicles enter at the lane start unless spawning mid-lane, so the rest are blocked too
        if (!w.perturbations.midlane_spawn) break;
        ++it;
        continue;
      }
      const double bt = p.decel * p.tau;
      const double safe = std::isinf(gap) ? kInf : -bt + std::sqrt(bt * bt + leader_speed * leader_speed + 2.0 * p.decel * gap);
      v.speed = std::max(0.0, std::min(v.desired_speed, safe));
      v.entry_time = now;
      v.entry_position = v.position;
      lane.insert(ahead_end, v);
      ++w.spawned;
      it = queue.erase(it);
    }
  }
}

}  // namespace

StepStats step_simulation(WorldState& w, Action command, double dt) {
  const auto& p = w.params;
  if (std::abs(dt - p.sim_dt) > 1e-12)
    throw std::invalid_argument("step dt " + std::to_string(dt) + " does not match sim_dt " + std::to_string(p.sim_dt));

  if (command == Action::Switch && w.phase.is_green()) {
    w.phase.id = (w.phase.id == PhaseId::NsGreen) ? PhaseId::NsAmber : PhaseId::EwAmber;
    w.phase.elapsed = 0.0;
  }

  StepStats stats;
  const double spacing = p.vehicle_length + p.min_gap;
  const double next_clock = w.clock + dt;

  for (std::size_t a = 0; a < w.lanes.size(); ++a) {
    auto& lane = w.lanes[a];
    const bool green = w.phase.has_green(static_cast<int>(a));
    std::size_t crossed = 0;
    const Vehicle* leader = nullptr;
    for (auto& v : lane) {
      double gap, leader_speed;
      if (leader) {
        gap = leader->position - spacing - v.position;
        leader_speed = leader->speed;
      } else if (green) {
        gap = kInf;
        leader_speed = 0.0;
      } else {
        gap = p.lane_length - v.position;  // stop line acts as a standing leader
        leader_speed = 0.0;
      }
      double speed = compute_target_speed(v.speed, gap, leader_speed, p, v.desired_speed);
      if (!std::isinf(gap)) speed = std::min(speed, std::max(gap, 0.0) / dt);
      v.speed = speed;
      v.position += speed * dt;
      // only a prefix of the queue can cross: nobody overtakes its leader
      if (green && v.position >= p.lane_length)
        ++crossed;
      else
        v.position = std::min(v.position, p.lane_length);
      leader = &v;
    }
    for (std::size_t i = 0; i < crossed; ++i) {
      Vehicle done = lane.front();
      lane.pop_front();
      done.exit_time = next_clock;
      stats.departed.push_back(done);
      ++w.departed;
    }
    for (auto& v : lane) {
      if (v.speed < p.wait_speed_threshold) v.accumulated_wait += dt;
      v.accumulated_penalty += (p.v_max - v.speed) / p.v_max;
    }
  }

  w.phase.elapsed += dt;
  if (w.phase.is_amber() && w.phase.elapsed >= p.amber_duration - 1e-9) {
    w.phase.id = (w.phase.id == PhaseId::NsAmber) ? PhaseId::EwGreen : PhaseId::NsGreen;
    w.phase.elapsed = 0.0;
  }

  auto arrivals = generate_arrivals(w.arrivals, p, w.perturbations, w.clock, dt, w.rng, w.next_id);
  w.generated += arrivals.size();
  for (auto& v : arrivals) w.pending[static_cast<std::size_t>(v.approach)].push_back(v);
  insert_pending(w, next_clock);
  w.clock = next_clock;

  for (const auto& lane : w.lanes)
    for (const auto& v : lane) {
      const bool waiting = v.speed < p.wait_speed_threshold;
      if (v.detected) {
        ++stats.present_detected;
        stats.waiting_detected += waiting;
      } else {
        ++stats.present_undetected;
        stats.waiting_undetected += waiting;
      }
    }
  stats.reward = step_reward(w);
  return stats;
}

double step_reward(const WorldState& w) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& lane : w.lanes)
    for (const auto& v : lane) {
      sum -= (w.params.v_max - v.speed) / w.params.v_max;
      ++n;
    }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

RawDetection measure_state(const WorldState& w) {
  RawDetection raw;
  raw.detected_count.assign(w.lanes.size(), 0);
  raw.nearest_distance.assign(w.lanes.size(), w.params.lane_length);
  raw.phase = w.phase;
  raw.clock = w.clock;
  for (std::size_t a = 0; a < w.lanes.size(); ++a) {
    bool seen = false;
    for (const auto& v : w.lanes[a]) {
      if (!v.detected) continue;
      ++raw.detected_count[a];
      if (!seen) raw.nearest_distance[a] = w.params.lane_length - v.position;
      seen = true;
    }
  }
  return raw;
}

}  // namespace tsc
