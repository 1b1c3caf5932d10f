#pragma once

#include <string>

#include <json.hpp>

#include "adtheme/classifier.hpp"
#include "adtheme/ranker.hpp"

namespace adtheme {

// Full run configuration. Defaults are the production-scale constants;
// apply_toy() switches the encoder to the small desk-scale preset.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  RankerConfig ranker;
  std::uint64_t seed = 7;

  void apply_toy();

  nlohmann::json to_json() const;
  std::string hash() const;  // deterministic digest of the resolved config

  // JSON object with optional sections "model", "train", "ranker", "seed".
  // Unknown keys raise ConfigError naming the key.
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::string& path);
};

}  // namespace adtheme
