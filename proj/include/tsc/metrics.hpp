#pragma once

#include "tsc/sim.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>

namespace tsc {

/// Episode outcome. Means are empty (never NaN) when their class had no
/// departures.
struct MetricsRecord {
  std::string scenario;
  std::string controller;
  double detection_rate = 0.0;
  double flow_scale = 1.0;
  std::uint64_t seed = 0;

  std::optional<double> wait_all;
  std::optional<double> wait_detected;
  std::optional<double> wait_undetected;
  std::size_t departures = 0;
  std::size_t departures_detected = 0;
  std::size_t departures_undetected = 0;
  std::optional<double> trip_mean;      // t_S, lane entry to stop line
  std::optional<double> trip_min_mean;  // t_min, same distance at v_max

  bool empty() const { return departures == 0; }
  bool operator==(const MetricsRecord&) const = default;
};

/// Aggregates departed vehicles generated within [from, to).
MetricsRecord collect_metrics(std::span<const Vehicle> departed, const RoadParams& params,
                              double from = -1e300, double to = 1e300);

}  // namespace tsc
