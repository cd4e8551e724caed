#include "support/invariants.hpp"
#include "tsc/metrics.hpp"
#include "tsc/sim.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace tsc;

namespace {

ArrivalSpec constant_rates(double rate, double p = 1.0, int approaches = 4) {
  ArrivalSpec a;
  a.rates.assign(static_cast<std::size_t>(approaches), RateProfile::constant(rate));
  a.detection_rate = p;
  return a;
}

Vehicle at(int approach, double position, double speed, bool detected = true) {
  Vehicle v;
  v.approach = approach;
  v.position = position;
  v.speed = speed;
  v.desired_speed = RoadParams{}.v_max;
  v.detected = detected;
  return v;
}

}  // namespace

TEST(Arrivals, ZeroRateGeneratesNothing) {
  const RoadParams road;
  std::mt19937_64 rng(3);
  std::uint64_t id = 0;
  for (double dt : {0.5, 1.0, 10.0})
    EXPECT_TRUE(generate_arrivals(constant_rates(0.0), road, {}, 0.0, dt, rng, id).empty());
}

TEST(Arrivals, PoissonMeanWithinThreeSigma) {
  const RoadParams road;
  ArrivalSpec spec;
  spec.rates = {RateProfile::constant(0.1)};
  std::mt19937_64 rng(11);
  std::uint64_t id = 0;
  const int steps = 1'000'000;
  double total = 0.0;
  for (int i = 0; i < steps; ++i) total += static_cast<double>(generate_arrivals(spec, road, {}, 0.0, 0.5, rng, id).size());
  const double mean = total / steps;
  const double sigma = std::sqrt(0.05) / 1000.0;
  EXPECT_NEAR(mean, 0.05, 3.0 * sigma);
}

TEST(Arrivals, FullDetectionMarksEveryVehicle) {
  const RoadParams road;
  std::mt19937_64 rng(5);
  std::uint64_t id = 0;
  std::size_t n = 0;
  for (int i = 0; i < 2000; ++i)
    for (const auto& v : generate_arrivals(constant_rates(0.5, 1.0), road, {}, 0.0, 0.5, rng, id)) {
      EXPECT_TRUE(v.detected);
      ++n;
    }
  EXPECT_GT(n, 0u);
}

TEST(Arrivals, HourlyProfileSelectsHourOfDay) {
  RateProfile r;
  for (int h = 0; h < 24; ++h) r.hourly.push_back(h);
  EXPECT_EQ(r.at(0.0), 0.0);
  EXPECT_EQ(r.at(8 * 3600.0 + 5.0), 8.0);
  EXPECT_EQ(r.at(86400.0 + 18 * 3600.0), 18.0);
  EXPECT_EQ(r.peak(), 23.0);
}

TEST(Arrivals, SpeedNoiseKeepsDesiredSpeedInRange) {
  const RoadParams road;
  Perturbations noisy;
  noisy.speed_noise_sigma = 0.3;
  std::mt19937_64 rng(9);
  std::uint64_t id = 0;
  bool any_slower = false;
  for (int i = 0; i < 2000; ++i)
    for (const auto& v : generate_arrivals(constant_rates(0.5), road, noisy, 0.0, 0.5, rng, id)) {
      EXPECT_LE(v.desired_speed, road.v_max);
      EXPECT_GE(v.desired_speed, 0.5 * road.v_max);
      any_slower |= v.desired_speed < road.v_max;
    }
  EXPECT_TRUE(any_slower);
}

TEST(Arrivals, BulkArrivalsPreserveOfferedVolume) {
  const RoadParams road;
  Perturbations bulk;
  bulk.bulk_mean_size = 3.0;
  ArrivalSpec spec;
  spec.rates = {RateProfile::constant(0.2)};
  std::mt19937_64 rng(13);
  std::uint64_t id = 0;
  const int steps = 400'000;
  double total = 0.0;
  for (int i = 0; i < steps; ++i) total += static_cast<double>(generate_arrivals(spec, road, bulk, 0.0, 0.5, rng, id).size());
  EXPECT_NEAR(total / steps, 0.1, 0.003);
}

TEST(TargetSpeed, FreeFlowLimit) {
  const RoadParams p;
  EXPECT_DOUBLE_EQ(compute_target_speed(5.0, 1e9, 0.0, p), 5.0 + p.accel * p.sim_dt);
  EXPECT_DOUBLE_EQ(compute_target_speed(13.5, 1e9, 0.0, p), p.v_max);
}

TEST(TargetSpeed, NoRoomMeansStop) {
  EXPECT_EQ(compute_target_speed(0.0, 0.0, 0.0, RoadParams{}), 0.0);
}

TEST(TargetSpeed, KraussGoldenValue) {
  // -b*tau + sqrt((b*tau)^2 + 2*b*gap) with b = 4.5, tau = 1, gap = 20
  EXPECT_NEAR(compute_target_speed(10.0, 20.0, 0.0, RoadParams{}), 9.650971698084906, 1e-12);
}

TEST(Step, EmptyWorldIsQuiet) {
  WorldState w = make_world(RoadParams{}, constant_rates(0.0), 1);
  for (Action a : {Action::Keep, Action::Switch}) {
    const auto st = step_simulation(w, a, 0.5);
    EXPECT_EQ(st.reward, 0.0);
    EXPECT_TRUE(st.departed.empty());
  }
}

TEST(Step, VehicleAtFullSpeedOnGreenCostsNothing) {
  const RoadParams p;
  WorldState w = make_world(p, constant_rates(0.0), 1);
  w.lanes[0].push_back(at(0, 10.0, p.v_max));
  const auto st = step_simulation(w, Action::Keep, 0.5);
  EXPECT_EQ(st.reward, 0.0);
}

TEST(Step, RejectsForeignTimeStep) {
  WorldState w = make_world(RoadParams{}, constant_rates(0.0), 1);
  EXPECT_THROW(step_simulation(w, Action::Keep, 1.0), std::invalid_argument);
}

TEST(Step, SwitchGoesThroughAmber) {
  const RoadParams p;
  WorldState w = make_world(p, constant_rates(0.0), 1);
  step_simulation(w, Action::Switch, 0.5);
  EXPECT_EQ(w.phase.id, PhaseId::NsAmber);
  step_simulation(w, Action::Switch, 0.5);  // ignored during amber
  EXPECT_EQ(w.phase.id, PhaseId::NsAmber);
  for (int i = 0; i < 4; ++i) step_simulation(w, Action::Keep, 0.5);
  EXPECT_EQ(w.phase.id, PhaseId::EwGreen);
  EXPECT_EQ(w.phase.elapsed, 0.0);
}

TEST(Step, RedLightHoldsQueue) {
  const RoadParams p;
  WorldState w = make_world(p, constant_rates(0.0), 1);
  w.lanes[1].push_back(at(1, 100.0, p.v_max));  // E/W is red
  for (int i = 0; i < 100; ++i) EXPECT_TRUE(step_simulation(w, Action::Keep, 0.5).departed.empty());
  ASSERT_EQ(w.lanes[1].size(), 1u);
  EXPECT_LE(w.lanes[1][0].position, p.lane_length);
  EXPECT_EQ(w.lanes[1][0].speed, 0.0);
  EXPECT_GT(w.lanes[1][0].accumulated_wait, 0.0);
}

TEST(Step, GreenLightDischarges) {
  const RoadParams p;
  WorldState w = make_world(p, constant_rates(0.0), 1);
  w.lanes[0].push_back(at(0, 120.0, 10.0));
  const auto st = step_simulation(w, Action::Keep, 0.5);
  ASSERT_EQ(st.departed.size(), 1u);
  EXPECT_EQ(st.departed[0].exit_time, 0.5);
  EXPECT_EQ(w.departed, 1u);
}

TEST(Step, DeterministicTrajectories) {
  auto run = [] {
    WorldState w = make_world(RoadParams{}, constant_rates(0.2, 0.5), 77);
    std::mt19937_64 cmd(4);
    std::vector<WorldState> trace;
    for (int i = 0; i < 400; ++i) {
      step_simulation(w, cmd() % 7 == 0 ? Action::Switch : Action::Keep, 0.5);
      trace.push_back(w);
    }
    return trace;
  };
  EXPECT_TRUE(run() == run());
}

TEST(Step, InvariantsHoldUnderRandomCommands) {
  for (double rate : {0.05, 0.3, 0.8}) {
    WorldState w = make_world(RoadParams{}, constant_rates(rate, 0.5), 21);
    std::mt19937_64 rng(5);
    fuzz::FuzzTally tally;
    fuzz::fuzz_world(w, 20'000, rng, 0.1, tally);
    EXPECT_TRUE(tally.clean()) << "rate " << rate << ": collisions " << tally.collisions << ", red crossings "
                               << tally.red_crossings << ", conservation " << tally.conservation_breaks;
  }
}

TEST(Step, PerturbedWorldsKeepInvariants) {
  Perturbations all{3.0, 0.2, true};
  WorldState w = make_world(RoadParams{}, constant_rates(0.2, 0.5), 8, 0.0, all);
  std::mt19937_64 rng(6);
  fuzz::FuzzTally tally;
  fuzz::fuzz_world(w, 20'000, rng, 0.05, tally);
  EXPECT_TRUE(tally.clean());
}

TEST(Reward, StoppedVehicleIsMinusOne) {
  const RoadParams p;
  WorldState w = make_world(p, constant_rates(0.0), 1);
  w.lanes[0].push_back(at(0, 50.0, 0.0));
  EXPECT_EQ(step_reward(w), -1.0);
}

TEST(Reward, FullSpeedIsZero) {
  const RoadParams p;
  WorldState w = make_world(p, constant_rates(0.0), 1);
  w.lanes[0].push_back(at(0, 50.0, p.v_max));
  EXPECT_EQ(step_reward(w), 0.0);
}

TEST(Reward, AveragesOverVehicles) {
  const RoadParams p;
  WorldState w = make_world(p, constant_rates(0.0), 1);
  w.lanes[0].push_back(at(0, 50.0, p.v_max));
  w.lanes[1].push_back(at(1, 50.0, 0.0));
  EXPECT_DOUBLE_EQ(step_reward(w), -0.5);
}

TEST(Measure, NothingDetected) {
  WorldState w = make_world(RoadParams{}, constant_rates(0.0), 1);
  const auto raw = measure_state(w);
  for (std::size_t a = 0; a < 4; ++a) {
    EXPECT_EQ(raw.detected_count[a], 0);
    EXPECT_EQ(raw.nearest_distance[a], 125.0);
  }
}

TEST(Measure, DistanceToStopLine) {
  WorldState w = make_world(RoadParams{}, constant_rates(0.0), 1);
  w.lanes[0].push_back(at(0, 85.0, 0.0));
  const auto raw = measure_state(w);
  EXPECT_EQ(raw.detected_count[0], 1);
  EXPECT_EQ(raw.nearest_distance[0], 40.0);
}

TEST(Measure, UndetectedVehiclesAreInvisible) {
  WorldState w = make_world(RoadParams{}, constant_rates(0.0), 1);
  for (int i = 0; i < 5; ++i) w.lanes[2].push_back(at(2, 120.0 - 8.0 * i, 0.0, false));
  const auto raw = measure_state(w);
  EXPECT_EQ(raw.detected_count[2], 0);
  EXPECT_EQ(raw.nearest_distance[2], 125.0);
}

TEST(Metrics, SingleDetectedVehicle) {
  Vehicle v = at(0, 0.0, 0.0, true);
  v.accumulated_wait = 10.0;
  v.exit_time = 20.0;
  const std::vector<Vehicle> done{v};
  const auto m = collect_metrics(done, RoadParams{});
  EXPECT_EQ(m.wait_all, 10.0);
  EXPECT_EQ(m.wait_detected, 10.0);
  EXPECT_FALSE(m.wait_undetected.has_value());
}

TEST(Metrics, ClassSplit) {
  Vehicle d = at(0, 0.0, 0.0, true), u = at(1, 0.0, 0.0, false);
  d.accumulated_wait = 4.0;
  u.accumulated_wait = 8.0;
  const std::vector<Vehicle> done{d, u};
  const auto m = collect_metrics(done, RoadParams{});
  EXPECT_EQ(m.wait_detected, 4.0);
  EXPECT_EQ(m.wait_undetected, 8.0);
  EXPECT_EQ(m.wait_all, 6.0);
  EXPECT_EQ(m.departures, 2u);
}

TEST(Metrics, TripNeverBeatsFreeFlow) {
  WorldState w = make_world(RoadParams{}, constant_rates(0.15, 0.5), 31);
  std::vector<Vehicle> done;
  for (int i = 0; i < 8000; ++i) {
    auto st = step_simulation(w, i % 60 == 0 ? Action::Switch : Action::Keep, 0.5);
    done.insert(done.end(), st.departed.begin(), st.departed.end());
  }
  const auto m = collect_metrics(done, w.params);
  ASSERT_TRUE(m.trip_mean && m.trip_min_mean);
  EXPECT_GE(*m.trip_mean, *m.trip_min_mean);
  EXPECT_GE(*m.wait_all, 0.0);
}
