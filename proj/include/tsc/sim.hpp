#pragma once

#include <cstdint>
#include <deque>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace tsc {

/// Controller command: hold the current phase or start the transition to
/// the opposing green.
enum class Action : int { Keep = 0, Switch = 1 };
inline constexpr int kActionCount = 2;

const char* to_string(Action a);

/// Geometry and SUMO-default Krauss driver parameters. Approaches with even
/// index (N, S) share one green, odd ones (E, W) the other.
struct RoadParams {
  int approach_count = 4;
  double lane_length = 125.0;   // m
  double v_max = 13.89;         // m/s
  double accel = 2.6;           // m/s^2
  double decel = 4.5;           // m/s^2
  double tau = 1.0;             // s
  double vehicle_length = 5.0;  // m
  double min_gap = 2.5;         // m
  double sim_dt = 0.5;          // s
  double amber_duration = 3.0;  // s
  double wait_speed_threshold = 0.1;  // m/s

  void validate() const;
  bool operator==(const RoadParams&) const = default;
};

enum class PhaseId { NsGreen, NsAmber, EwGreen, EwAmber };

const char* to_string(PhaseId id);

struct SignalPhase {
  PhaseId id = PhaseId::NsGreen;
  double elapsed = 0.0;

  bool is_amber() const { return id == PhaseId::NsAmber || id == PhaseId::EwAmber; }
  bool is_green() const { return !is_amber(); }
  /// 0 for the N/S group, 1 for E/W. Amber reports the green it follows.
  int served_group() const { return (id == PhaseId::NsGreen || id == PhaseId::NsAmber) ? 0 : 1; }
  bool serves(int approach) const { return approach % 2 == served_group(); }
  bool has_green(int approach) const { return is_green() && serves(approach); }

  bool operator==(const SignalPhase&) const = default;
};

struct Vehicle {
  std::uint64_t id = 0;
  int approach = 0;
  double position = 0.0;  // m from lane entry; stop line at lane_length
  double speed = 0.0;
  double desired_speed = 0.0;
  bool detected = false;
  double spawn_time = 0.0;  // generation time
  double entry_time = 0.0;  // time it was placed on the lane
  double entry_position = 0.0;
  double exit_time = 0.0;   // set on departure
  double accumulated_wait = 0.0;
  double accumulated_penalty = 0.0;

  bool operator==(const Vehicle&) const = default;
};

/// Arrival rate in veh/s: either one constant value or 24 hourly values
/// keyed by hour of day.
struct RateProfile {
  std::vector<double> hourly;

  static RateProfile constant(double rate) { return {{rate}}; }
  double at(double clock) const;
  double peak() const;
  bool operator==(const RateProfile&) const = default;
};

struct ArrivalSpec {
  std::vector<RateProfile> rates;  // one per approach
  double detection_rate = 1.0;

  void validate(int approach_count) const;
  bool operator==(const ArrivalSpec&) const = default;
};

/// Departures from the training-time assumptions, used for robustness
/// studies. The defaults reproduce the unperturbed simulator exactly.
struct Perturbations {
  double bulk_mean_size = 1.0;     // mean vehicles per arrival event
  double speed_noise_sigma = 0.0;  // relative spread of desired speeds
  bool midlane_spawn = false;      // spawn anywhere on the first half of the lane

  bool none() const { return bulk_mean_size == 1.0 && speed_noise_sigma == 0.0 && !midlane_spawn; }
  bool operator==(const Perturbations&) const = default;
};

struct WorldState {
  RoadParams params;
  ArrivalSpec arrivals;
  Perturbations perturbations;
  double clock = 0.0;  // s since scenario midnight
  SignalPhase phase;
  std::vector<std::deque<Vehicle>> lanes;    // front of queue first
  std::vector<std::deque<Vehicle>> pending;  // generated, waiting for space
  std::mt19937_64 rng;
  std::uint64_t next_id = 0;
  std::uint64_t generated = 0;
  std::uint64_t spawned = 0;
  std::uint64_t departed = 0;

  std::size_t present() const;
  std::size_t waiting_for_entry() const;
  bool operator==(const WorldState&) const = default;
};

WorldState make_world(const RoadParams& params, const ArrivalSpec& arrivals, std::uint64_t seed,
                      double start_clock = 0.0, const Perturbations& perturbations = {});

struct StepStats {
  double reward = 0.0;
  std::size_t present_detected = 0;
  std::size_t present_undetected = 0;
  std::size_t waiting_detected = 0;
  std::size_t waiting_undetected = 0;
  std::vector<Vehicle> departed;
};

/// Per-approach detector output. Only detected vehicles contribute.
struct RawDetection {
  std::vector<int> detected_count;
  std::vector<double> nearest_distance;  // stop line to nearest detected vehicle
  SignalPhase phase;
  double clock = 0.0;

  bool amber() const { return phase.is_amber(); }
  bool operator==(const RawDetection&) const = default;
};

/// Vehicles generated during [clock, clock + dt). Counts per approach are
/// Poisson(rate * dt); detectability is Bernoulli(detection_rate). Positions
/// are entry positions; speeds are filled in at insertion.
std::vector<Vehicle> generate_arrivals(const ArrivalSpec& spec, const RoadParams& params,
                                       const Perturbations& perturbations, double clock, double dt,
                                       std::mt19937_64& rng, std::uint64_t& next_id);

/// Krauss safe speed capped by acceleration and the desired speed.
/// `desired_speed` <= 0 means params.v_max.
double compute_target_speed(double v, double gap, double leader_speed, const RoadParams& params,
                            double desired_speed = 0.0);

/// Advances the world by one tick. Throws std::invalid_argument if `dt`
/// differs from params.sim_dt. A Switch during amber is a no-op.
StepStats step_simulation(WorldState& world, Action command, double dt);

/// Mean of -(v_max - v) / v_max over vehicles on the lanes; 0 when empty.
double step_reward(const WorldState& world);

RawDetection measure_state(const WorldState& world);

}  // namespace tsc
