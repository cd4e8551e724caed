#include "tsc/baselines.hpp"

#include <stdexcept>

namespace tsc {

void PretimedPlan::validate() const {
  if (!(green_duration > 0.0) || !(amber_duration > 0.0))
    throw std::invalid_argument("pre-timed durations must be > 0");
}

Action pretimed_decide(const SignalPhase& phase, const PretimedPlan& plan) {
  if (phase.is_green() && phase.elapsed >= plan.green_duration - 1e-9) return Action::Switch;
  return Action::Keep;
}

Action longest_queue_decide(const RawDetection& raw, int margin) {
  if (raw.amber()) return Action::Keep;
  int green = 0, red = 0;
  for (std::size_t a = 0; a < raw.detected_count.size(); ++a)
    (raw.phase.serves(static_cast<int>(a)) ? green : red) += raw.detected_count[a];
  return red - green >= margin && red > green ? Action::Switch : Action::Keep;
}

}  // namespace tsc
