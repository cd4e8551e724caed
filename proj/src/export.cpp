#include "tsc/experiment.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

namespace tsc {

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

namespace {

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

}  // namespace

std::string runs_csv(const SweepResult& result) {
  auto rows = result.rows;
  std::stable_sort(rows.begin(), rows.end(), [](const MetricsRecord& a, const MetricsRecord& b) {
    return std::tie(a.scenario, a.controller, a.detection_rate, a.flow_scale, a.seed) <
           std::tie(b.scenario, b.controller, b.detection_rate, b.flow_scale, b.seed);
  });
  std::ostringstream os;
  os << "scenario,controller,detection_rate,flow_scale,seed,wait_all,wait_detected,wait_undetected,trip_mean,"
        "departures\n";
  for (const auto& m : rows)
    os << m.scenario << ',' << m.controller << ',' << format_double(m.detection_rate) << ','
       << format_double(m.flow_scale) << ',' << m.seed << ',' << opt(m.wait_all) << ',' << opt(m.wait_detected)
       << ',' << opt(m.wait_undetected) << ',' << opt(m.trip_mean) << ',' << m.departures << '\n';
  return os.str();
}

std::string summary_csv(const SweepResult& result) {
  std::ostringstream os;
  os << "scenario,controller,detection_rate,flow_scale,reps,wait_all_mean,wait_all_ci95,wait_detected_mean,"
        "wait_detected_ci95,wait_undetected_mean,wait_undetected_ci95,trip_mean_mean,trip_mean_ci95,"
        "departures_mean,departures_ci95\n";
  for (const auto& c : aggregate(result)) {
    os << c.scenario << ',' << c.controller << ',' << format_double(c.detection_rate) << ','
       << format_double(c.flow_scale) << ',' << c.reps;
    for (const Stat* s : {&c.wait_all, &c.wait_detected, &c.wait_undetected, &c.trip, &c.departures})
      os << ',' << opt(s->mean) << ',' << opt(s->ci95);
    os << '\n';
  }
  return os.str();
}

std::string learning_curve_csv(const LearningCurve& curve) {
  std::ostringstream os;
  os << "episode,mean_penalty,epsilon\n";
  for (const auto& p : curve) os << p.episode << ',' << format_double(p.mean_penalty) << ',' << format_double(p.epsilon) << '\n';
  return os.str();
}

std::string robustness_deltas_csv(const std::vector<RobustnessDelta>& deltas) {
  std::ostringstream os;
  os << "variant,detection_rate,wait_all,delta_vs_unperturbed\n";
  for (const auto& d : deltas)
    os << d.variant << ',' << format_double(d.detection_rate) << ',' << opt(d.wait_all) << ','
       << opt(d.delta_vs_unperturbed) << '\n';
  return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::system_error(errno, std::generic_category(), "cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw std::system_error(errno, std::generic_category(), "write failed: " + path.string());
}

void export_results(const SweepResult& result, const std::filesystem::path& dir, const std::string& prefix) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::system_error(ec, "cannot create output directory " + dir.string());
  write_text(dir / (prefix + "_runs.csv"), runs_csv(result));
  write_text(dir / (prefix + "_summary.csv"), summary_csv(result));
}

}  // namespace tsc
