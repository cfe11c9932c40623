#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "humot/error.hpp"
#include "humot/mocap/prepare.hpp"
#include "humot/model/config.hpp"
#include "humot/training/config.hpp"

extern char** environ;

namespace humot {

struct EvalOptions {
  std::vector<double> sigmas_cm{0, 1, 2, 3, 5, 7, 10};
  std::vector<double> proportions{0.25, 0.4, 0.5, 0.7, 0.85, 1.0};
  std::vector<std::string> unseen_topologies;
  std::string split = "validation";

  bool operator==(const EvalOptions&) const = default;
};

/// Fully merged configuration of one command.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  std::uint64_t seed = 0;
  std::string out = "out";
  std::string device = "cpu";
  std::string dataset;
  std::string checkpoint;
  bool resume = false;
  PrepareOptions prepare;
  EvalOptions eval;

  bool operator==(const RunConfig&) const = default;
};

inline void to_json(nlohmann::json& j, const PrepareOptions& p) {
  j = {{"target_fps", p.target_fps}, {"validation_fraction", p.validation_fraction},
       {"holdout_topology", p.holdout_topology}, {"axes", p.axes}, {"unit", p.unit}, {"topology", p.topology}};
}

inline void from_json(const nlohmann::json& j, PrepareOptions& p) {
  p.target_fps = j.value("target_fps", p.target_fps);
  p.validation_fraction = j.value("validation_fraction", p.validation_fraction);
  p.holdout_topology = j.value("holdout_topology", p.holdout_topology);
  p.axes = j.value("axes", p.axes);
  p.unit = j.value("unit", p.unit);
  p.topology = j.value("topology", p.topology);
}

inline void to_json(nlohmann::json& j, const EvalOptions& e) {
  j = {{"sigmas_cm", e.sigmas_cm}, {"proportions", e.proportions}, {"unseen_topologies", e.unseen_topologies},
       {"split", e.split}};
}

inline void from_json(const nlohmann::json& j, EvalOptions& e) {
  e.sigmas_cm = j.value("sigmas_cm", e.sigmas_cm);
  e.proportions = j.value("proportions", e.proportions);
  e.unseen_topologies = j.value("unseen_topologies", e.unseen_topologies);
  e.split = j.value("split", e.split);
}

inline void to_json(nlohmann::json& j, const RunConfig& c) {
  j = {{"model", c.model},     {"train", c.train},     {"seed", c.seed},
       {"out", c.out},         {"device", c.device},   {"dataset", c.dataset},
       {"checkpoint", c.checkpoint}, {"resume", c.resume}, {"prepare", c.prepare},
       {"eval", c.eval}};
}

inline void from_json(const nlohmann::json& j, RunConfig& c) {
  if (j.contains("model")) c.model = j.at("model").get<ModelConfig>();
  if (j.contains("train")) c.train = j.at("train").get<TrainConfig>();
  c.seed = j.value("seed", c.seed);
  c.out = j.value("out", c.out);
  c.device = j.value("device", c.device);
  c.dataset = j.value("dataset", c.dataset);
  c.checkpoint = j.value("checkpoint", c.checkpoint);
  c.resume = j.value("resume", c.resume);
  if (j.contains("prepare")) c.prepare = j.at("prepare").get<PrepareOptions>();
  if (j.contains("eval")) c.eval = j.at("eval").get<EvalOptions>();
}

inline constexpr const char* kEnvPrefix = "HUMOT_";

/// HUMOT_* variables of the process environment.
inline std::map<std::string, std::string> humot_environment() {
  std::map<std::string, std::string> out;
  const std::string prefix = kEnvPrefix;
  for (char** e = environ; e && *e; ++e) {
    const std::string kv = *e;
    const auto eq = kv.find('=');
    if (eq == std::string::npos || kv.compare(0, prefix.size(), prefix) != 0) continue;
    out[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  return out;
}

namespace detail {

/// HUMOT_TRAIN__BATCH_SIZE -> /train/batch_size
inline nlohmann::json::json_pointer env_pointer(const std::string& name) {
  std::string key = name.substr(std::string(kEnvPrefix).size());
  std::transform(key.begin(), key.end(), key.begin(), [](unsigned char ch) { return std::tolower(ch); });
  std::string ptr = "/";
  for (std::size_t i = 0; i < key.size(); ++i) {
    if (key.compare(i, 2, "__") == 0) {
      ptr += '/';
      ++i;
    } else {
      ptr += key[i];
    }
  }
  return nlohmann::json::json_pointer(ptr);
}

/// Interprets `text` with the type of the default value at the same key.
inline nlohmann::json env_value(const nlohmann::json& like, const std::string& text, const std::string& name) {
  if (like.is_string()) return text;
  try {
    nlohmann::json v = nlohmann::json::parse(text);
    if (like.is_boolean() && !v.is_boolean()) throw UsageError(name + ": expected true or false");
    if (like.is_number() && !v.is_number()) throw UsageError(name + ": expected a number");
    if (like.is_array() && !v.is_array()) throw UsageError(name + ": expected a JSON array");
    return v;
  } catch (const nlohmann::json::parse_error&) {
    throw UsageError(name + ": cannot parse '" + text + "'");
  }
}

}  // namespace detail

/// Resolves the configuration. Later layers win: defaults, environment,
/// config file, command-line flags. `flags` holds only explicitly given
/// options, as a JSON object shaped like RunConfig.
inline RunConfig resolve_run_config(const std::map<std::string, std::string>& env, const nlohmann::json& file,
                                    const nlohmann::json& flags) {
  nlohmann::json merged = RunConfig{};
  for (const auto& [name, text] : env) {
    const auto ptr = detail::env_pointer(name);
    if (!merged.contains(ptr)) throw UsageError("unknown environment override " + name);
    merged[ptr] = detail::env_value(merged[ptr], text, name);
  }
  if (!file.is_null()) {
    if (!file.is_object()) throw UsageError("config file must hold a JSON object");
    merged.merge_patch(file);
  }
  if (!flags.is_null()) merged.merge_patch(flags);
  RunConfig c;
  try {
    c = merged.get<RunConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("invalid configuration: ") + e.what());
  }
  c.train.seed = c.seed;
  c.model.validate();
  c.train.validate();
  if (c.device != "cpu") throw UsageError("device '" + c.device + "' is not available; only 'cpu' is supported");
  return c;
}

inline nlohmann::json load_config_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot read config file " + path.string());
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
}

/// Writes run_config.json into the output directory.
inline void write_run_config(const RunConfig& c, const std::filesystem::path& dir, const std::string& command) {
  std::filesystem::create_directories(dir);
  nlohmann::json j = c;
  j["command"] = command;
  std::ofstream os(dir / "run_config.json", std::ios::trunc);
  if (!os) throw FileError(FileErrorCode::kIo, (dir / "run_config.json").string(), "cannot open for writing");
  os << j.dump(2) << "\n";
}

}  // namespace humot
