#include "tsc/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace tsc {

namespace {

struct Probe {
  double loss;
  std::vector<bool> pattern;
};

Probe probe(const QNetwork& net, const Vector<double>& x, int action, double target) {
  Probe p{0.0, {}};
  Vector<double> a = x;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    Vector<double> z = net.weights[l] * a + net.biases[l];
    if (l + 1 < net.weights.size()) {
      for (Eigen::Index i = 0; i < z.rows(); ++i) p.pattern.push_back(z(i) > 0.0);
      z = z.cwiseMax(0.0);
    }
    a = z;
  }
  const double r = a(action) - target;
  p.loss = 0.5 * r * r;
  return p;
}

}  // namespace

GradCheckReport gradient_check(const QNetwork& net, const Vector<double>& x, int action, double target,
                               double h) {
  QNetwork grad;
  backward<double>(net, x, action, target, grad);

  GradCheckReport report;
  report.trials = 1;
  const auto base_pattern = probe(net, x, action, target).pattern;
  QNetwork work = net;

  auto check = [&](double& param, double analytic) {
    const double saved = param;
    param = saved + h;
    const Probe plus = probe(work, x, action, target);
    param = saved - h;
    const Probe minus = probe(work, x, action, target);
    param = saved;
    if (plus.pattern != base_pattern || minus.pattern != base_pattern) {
      ++report.kink_skipped;
      return;
    }
    const double numeric = (plus.loss - minus.loss) / (2.0 * h);
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    report.max_relative_error = std::max(report.max_relative_error, std::abs(analytic - numeric) / denom);
    ++report.entries_checked;
  };

  for (std::size_t l = 0; l < work.weights.size(); ++l) {
    for (Eigen::Index c = 0; c < work.weights[l].cols(); ++c)
      for (Eigen::Index r = 0; r < work.weights[l].rows(); ++r) check(work.weights[l](r, c), grad.weights[l](r, c));
    for (Eigen::Index r = 0; r < work.biases[l].rows(); ++r) check(work.biases[l](r), grad.biases[l](r));
  }
  return report;
}

GradCheckReport random_gradient_check(int trials, std::uint64_t seed, double h) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> input_dim(1, 6), width(1, 8), hidden_layers(1, 2), action(0, 1);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  GradCheckReport total;
  for (int t = 0; t < trials; ++t) {
    MlpSpec spec{{input_dim(rng)}};
    const int hidden = hidden_layers(rng);
    for (int i = 0; i < hidden; ++i) spec.layer_dims.push_back(width(rng));
    spec.layer_dims.push_back(2);

    QNetwork net = init_network<double>(spec, rng);
    for (auto& b : net.biases)
      for (Eigen::Index i = 0; i < b.rows(); ++i) b(i) = 0.5 * unit(rng);
    Vector<double> x(spec.input_dim());
    for (Eigen::Index i = 0; i < x.rows(); ++i) x(i) = unit(rng);
    const double target = 2.0 * unit(rng);

    const auto r = gradient_check(net, x, action(rng), target, h);
    total.max_relative_error = std::max(total.max_relative_error, r.max_relative_error);
    total.entries_checked += r.entries_checked;
    total.kink_skipped += r.kink_skipped;
    ++total.trials;
  }
  return total;
}

}  // namespace tsc
