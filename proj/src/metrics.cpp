#include "tsc/metrics.hpp"

namespace tsc {

namespace {

struct Mean {
  double sum = 0.0;
  std::size_t n = 0;
  void add(double v) {
    sum += v;
    ++n;
  }
  std::optional<double> get() const {
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
  }
};

}  // namespace

MetricsRecord collect_metrics(std::span<const Vehicle> departed, const RoadParams& params, double from,
                              double to) {
  Mean all, detected, undetected, trip, trip_min;
  for (const auto& v : departed) {
    if (v.spawn_time < from || v.spawn_time >= to) continue;
    all.add(v.accumulated_wait);
    (v.detected ? detected : undetected).add(v.accumulated_wait);
    trip.add(v.exit_time - v.entry_time);
    trip_min.add((params.lane_length - v.entry_position) / params.v_max);
  }
  MetricsRecord m;
  m.wait_all = all.get();
  m.wait_detected = detected.get();
  m.wait_undetected = undetected.get();
  m.departures = all.n;
  m.departures_detected = detected.n;
  m.departures_undetected = undetected.n;
  m.trip_mean = trip.get();
  m.trip_min_mean = trip_min.get();
  return m;
}

}  // namespace tsc
