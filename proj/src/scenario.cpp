#include "tsc/scenario.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace tsc {

using nlohmann::json;

void ScenarioConfig::validate() const {
  try {
    road.validate();
    arrivals.validate(road.approach_count);
    if (perturbations.bulk_mean_size < 1.0) throw std::invalid_argument("bulk_mean_size must be >= 1");
    if (perturbations.speed_noise_sigma < 0.0) throw std::invalid_argument("speed_noise_sigma must be >= 0");
  } catch (const std::invalid_argument& e) {
    throw ConfigError(ConfigError::Kind::Schema, e.what());
  }
  if (!(episode_length > 0.0)) throw ConfigError(ConfigError::Kind::Schema, "episode_length must be > 0");
  if (!(warmup >= 0.0) || warmup >= episode_length)
    throw ConfigError(ConfigError::Kind::Schema, "warmup must be in [0, episode_length)");
  if (!(start_time >= 0.0)) throw ConfigError(ConfigError::Kind::Schema, "start_time must be >= 0");
}

bool ScenarioConfig::time_varying() const {
  for (const auto& r : arrivals.rates)
    if (r.hourly.size() > 1) return true;
  return false;
}

ScenarioConfig ScenarioConfig::with_detection_rate(double p) const {
  ScenarioConfig s = *this;
  s.arrivals.detection_rate = p;
  return s;
}

ScenarioConfig ScenarioConfig::with_flow_scale(double factor) const {
  ScenarioConfig s = *this;
  for (auto& r : s.arrivals.rates)
    for (auto& v : r.hourly) v *= factor;
  s.flow_scale *= factor;
  return s;
}

ScenarioConfig ScenarioConfig::with_perturbations(const Perturbations& p) const {
  ScenarioConfig s = *this;
  s.perturbations = p;
  return s;
}

const std::vector<double>& builtin_day_profile() {
  static const std::vector<double> profile = {
      0.15, 0.10, 0.08, 0.08, 0.12, 0.30, 0.60, 0.95, 1.20, 0.90, 0.70, 0.70,
      0.75, 0.70, 0.70, 0.72, 0.85, 1.05, 1.20, 0.90, 0.60, 0.45, 0.30, 0.20};
  return profile;
}

std::vector<std::string> builtin_scenario_names() { return {"sparse", "medium", "dense", "uniform", "day"}; }

ScenarioConfig builtin_scenario(std::string_view name) {
  ScenarioConfig s;
  s.name = std::string(name);
  auto constant = [&](std::initializer_list<double> rates) {
    for (double r : rates) s.arrivals.rates.push_back(RateProfile::constant(r));
  };
  if (name == "sparse") {
    constant({0.02, 0.02, 0.02, 0.02});
  } else if (name == "medium") {
    constant({0.02, 0.1, 0.02, 0.05});
  } else if (name == "dense") {
    constant({0.5, 0.5, 0.5, 0.5});
  } else if (name == "uniform") {
    constant({0.1, 0.1, 0.1, 0.1});
  } else if (name == "day") {
    for (int a = 0; a < 4; ++a) {
      RateProfile r;
      for (double total : builtin_day_profile()) r.hourly.push_back(0.25 * total);
      s.arrivals.rates.push_back(r);
    }
    s.episode_length = 86400.0;
  } else {
    throw ConfigError(ConfigError::Kind::MissingFile, "unknown built-in scenario '" + std::string(name) + "'");
  }
  s.arrivals.detection_rate = 1.0;
  return s;
}

namespace {

[[noreturn]] void schema_error(const std::string& msg) { throw ConfigError(ConfigError::Kind::Schema, msg); }

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) schema_error(where + " must be an object");
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key)) schema_error("unknown key '" + key + "' in " + where);
}

double number(const json& j, const std::string& key) {
  if (!j.is_number()) schema_error("'" + key + "' must be a number");
  return j.get<double>();
}

std::vector<double> numbers(const json& j, const std::string& key) {
  if (!j.is_array()) schema_error("'" + key + "' must be an array of numbers");
  std::vector<double> out;
  for (const auto& v : j) out.push_back(number(v, key));
  return out;
}

void read_road(const json& j, RoadParams& road) {
  reject_unknown(j, {"approach_count", "lane_length", "v_max", "accel", "decel", "tau", "vehicle_length",
                     "min_gap", "sim_dt", "amber_duration", "wait_speed_threshold"},
                 "road");
  if (j.contains("approach_count")) {
    if (!j["approach_count"].is_number_integer()) schema_error("'approach_count' must be an integer");
    road.approach_count = j["approach_count"].get<int>();
  }
  const std::pair<const char*, double*> fields[] = {
      {"lane_length", &road.lane_length}, {"v_max", &road.v_max},
      {"accel", &road.accel},             {"decel", &road.decel},
      {"tau", &road.tau},                 {"vehicle_length", &road.vehicle_length},
      {"min_gap", &road.min_gap},         {"sim_dt", &road.sim_dt},
      {"amber_duration", &road.amber_duration}, {"wait_speed_threshold", &road.wait_speed_threshold}};
  for (const auto& [key, dst] : fields)
    if (j.contains(key)) *dst = number(j[key], key);
}

void read_arrivals(const json& j, ScenarioConfig& s) {
  reject_unknown(j, {"rates", "hourly", "day_profile", "shares"}, "arrivals");
  const int forms = j.contains("rates") + j.contains("hourly") + j.contains("day_profile");
  if (forms != 1) schema_error("arrivals needs exactly one of 'rates', 'hourly', 'day_profile'");
  s.arrivals.rates.clear();
  if (j.contains("rates")) {
    for (double r : numbers(j["rates"], "rates")) s.arrivals.rates.push_back(RateProfile::constant(r));
  } else if (j.contains("hourly")) {
    if (!j["hourly"].is_array()) schema_error("'hourly' must be an array of 24-entry arrays");
    for (const auto& row : j["hourly"]) {
      auto v = numbers(row, "hourly");
      if (v.size() != 24) schema_error("each 'hourly' row needs 24 entries");
      s.arrivals.rates.push_back(RateProfile{v});
    }
  } else {
    const auto total = numbers(j["day_profile"], "day_profile");
    if (total.size() != 24) schema_error("'day_profile' needs 24 entries");
    std::vector<double> shares(static_cast<std::size_t>(s.road.approach_count),
                               1.0 / static_cast<double>(s.road.approach_count));
    if (j.contains("shares")) shares = numbers(j["shares"], "shares");
    for (double sh : shares) {
      if (sh < 0.0) schema_error("shares must be >= 0");
      RateProfile r;
      for (double t : total) r.hourly.push_back(t * sh);
      s.arrivals.rates.push_back(r);
    }
  }
  if (j.contains("shares") && !j.contains("day_profile")) schema_error("'shares' only applies to 'day_profile'");
  for (const auto& r : s.arrivals.rates)
    for (double v : r.hourly)
      if (v < 0.0) schema_error("arrival rates must be >= 0");
}

void read_perturbations(const json& j, Perturbations& p) {
  reject_unknown(j, {"bulk_mean_size", "speed_noise_sigma", "midlane_spawn"}, "perturbations");
  if (j.contains("bulk_mean_size")) p.bulk_mean_size = number(j["bulk_mean_size"], "bulk_mean_size");
  if (j.contains("speed_noise_sigma")) p.speed_noise_sigma = number(j["speed_noise_sigma"], "speed_noise_sigma");
  if (j.contains("midlane_spawn")) {
    if (!j["midlane_spawn"].is_boolean()) schema_error("'midlane_spawn' must be a boolean");
    p.midlane_spawn = j["midlane_spawn"].get<bool>();
  }
}

}  // namespace

ScenarioConfig parse_scenario(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(ConfigError::Kind::Parse, e.what());
  }
  reject_unknown(j, {"name", "road", "arrivals", "detection_rate", "episode_length", "start_time", "warmup",
                     "perturbations"},
                 "scenario");
  ScenarioConfig s;
  if (j.contains("name")) {
    if (!j["name"].is_string()) schema_error("'name' must be a string");
    s.name = j["name"].get<std::string>();
  }
  if (j.contains("road")) read_road(j["road"], s.road);
  if (!j.contains("arrivals")) schema_error("scenario needs 'arrivals'");
  read_arrivals(j["arrivals"], s);
  if (j.contains("detection_rate")) s.arrivals.detection_rate = number(j["detection_rate"], "detection_rate");
  if (j.contains("episode_length")) s.episode_length = number(j["episode_length"], "episode_length");
  if (j.contains("start_time")) s.start_time = number(j["start_time"], "start_time");
  if (j.contains("warmup")) s.warmup = number(j["warmup"], "warmup");
  if (j.contains("perturbations")) read_perturbations(j["perturbations"], s.perturbations);
  s.validate();
  return s;
}

ScenarioConfig load_scenario(const std::string& path_or_name) {
  namespace fs = std::filesystem;
  if (!fs::exists(path_or_name)) {
    for (const auto& n : builtin_scenario_names())
      if (n == path_or_name) return builtin_scenario(n);
    throw ConfigError(ConfigError::Kind::MissingFile, "scenario file not found: " + path_or_name);
  }
  std::ifstream in(path_or_name);
  if (!in) throw ConfigError(ConfigError::Kind::MissingFile, "cannot open scenario file: " + path_or_name);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_scenario(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(e.kind(), path_or_name + ": " + e.what());
  }
}

}  // namespace tsc
