#include "tsc/agent.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace tsc {

using nlohmann::json;

Hyperparams parse_hyperparams(std::string_view text) {
  auto schema = [](const std::string& msg) { throw ConfigError(ConfigError::Kind::Schema, "hyperparams: " + msg); };
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(ConfigError::Kind::Parse, e.what());
  }
  if (!j.is_object()) schema("top level must be an object");

  Hyperparams hp;
  const std::pair<const char*, double*> reals[] = {
      {"gamma", &hp.gamma},
      {"learning_rate", &hp.adam.learning_rate},
      {"beta1", &hp.adam.beta1},
      {"beta2", &hp.adam.beta2},
      {"adam_epsilon", &hp.adam.epsilon},
      {"epsilon_start", &hp.epsilon_start},
      {"epsilon_end", &hp.epsilon_end},
      {"epsilon_decay_fraction", &hp.epsilon_decay_fraction},
      {"decision_interval", &hp.decision_interval},
      {"min_phase", &hp.min_phase},
      {"max_phase", &hp.max_phase},
      {"episode_seconds", &hp.episode_seconds}};
  const std::pair<const char*, int*> ints[] = {
      {"batch_size", &hp.batch_size}, {"target_sync_interval", &hp.target_sync_interval}, {"episodes", &hp.episodes},
      {"validation_episodes", &hp.validation_episodes}, {"restarts", &hp.restarts}};

  std::set<std::string> known = {"buffer_capacity", "hidden", "encoding", "clamp_targets", "selection"};
  for (const auto& [k, _] : reals) known.insert(k);
  for (const auto& [k, _] : ints) known.insert(k);
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) schema("unknown key '" + key + "'");

  for (const auto& [key, dst] : reals)
    if (j.contains(key)) {
      if (!j[key].is_number()) schema(std::string("'") + key + "' must be a number");
      *dst = j[key].get<double>();
    }
  for (const auto& [key, dst] : ints)
    if (j.contains(key)) {
      if (!j[key].is_number_integer()) schema(std::string("'") + key + "' must be an integer");
      *dst = j[key].get<int>();
    }
  if (j.contains("buffer_capacity")) {
    if (!j["buffer_capacity"].is_number_unsigned()) schema("'buffer_capacity' must be a positive integer");
    hp.buffer_capacity = j["buffer_capacity"].get<std::size_t>();
  }
  if (j.contains("hidden")) {
    if (!j["hidden"].is_array()) schema("'hidden' must be an array of integers");
    hp.hidden.clear();
    for (const auto& h : j["hidden"]) {
      if (!h.is_number_integer()) schema("'hidden' must be an array of integers");
      hp.hidden.push_back(h.get<int>());
    }
  }
  if (j.contains("clamp_targets")) {
    if (!j["clamp_targets"].is_boolean()) schema("'clamp_targets' must be a boolean");
    hp.clamp_targets = j["clamp_targets"].get<bool>();
  }
  if (j.contains("encoding")) {
    const auto e = j["encoding"].is_string() ? j["encoding"].get<std::string>() : std::string();
    if (e == "sign")
      hp.encoding = PhaseEncoding::Sign;
    else if (e == "indicator")
      hp.encoding = PhaseEncoding::Indicator;
    else
      schema("'encoding' must be \"sign\" or \"indicator\"");
  }
  if (j.contains("selection")) {
    const auto v = j["selection"].is_string() ? j["selection"].get<std::string>() : std::string();
    if (v == "delay")
      hp.selection = Selection::Delay;
    else if (v == "reward")
      hp.selection = Selection::Reward;
    else
      schema("'selection' must be \"delay\" or \"reward\"");
  }
  hp.validate();
  return hp;
}

Hyperparams load_hyperparams(const std::string& path) {
  if (!std::filesystem::exists(path))
    throw ConfigError(ConfigError::Kind::MissingFile, "hyperparams file not found: " + path);
  std::ifstream in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_hyperparams(buf.str());
}

}  // namespace tsc
