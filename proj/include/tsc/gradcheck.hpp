#pragma once

#include "tsc/mlp.hpp"

#include <cstdint>

namespace tsc {

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t entries_checked = 0;
  // Entries whose +-h probe changed a ReLU activation pattern; the loss is
  // not differentiable across the kink so those entries are not compared.
  std::size_t kink_skipped = 0;
  int trials = 0;
};

/// Compares `backward` against central differences of the forward loss,
/// entry by entry. Relative error is |a - n| / max(|a|, |n|, 1e-6).
GradCheckReport gradient_check(const QNetwork& net, const Vector<double>& x, int action, double target,
                               double h = 1e-5);

/// Runs `trials` checks on random networks no larger than [6,8,8,2].
GradCheckReport random_gradient_check(int trials, std::uint64_t seed, double h = 1e-5);

}  // namespace tsc
