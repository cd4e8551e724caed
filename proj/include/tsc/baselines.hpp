#pragma once

#include "tsc/sim.hpp"

namespace tsc {

struct PretimedPlan {
  double green_duration = 24.0;
  double amber_duration = 3.0;

  void validate() const;
};

/// Fixed-time signal: switch once the green has lasted `green_duration`.
/// Ignores every vehicle.
Action pretimed_decide(const SignalPhase& phase, const PretimedPlan& plan);

/// Actuated reference (not a learned policy): switch when the detected count
/// on red approaches exceeds the green approaches by at least `margin`.
/// Ties and amber keep. Callers apply the phase guard on top.
Action longest_queue_decide(const RawDetection& raw, int margin = 1);

}  // namespace tsc
