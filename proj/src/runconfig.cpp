#include "adtheme/runconfig.hpp"

#include <fstream>
#include <set>

#include "adtheme/errors.hpp"
#include "adtheme/rng.hpp"

namespace adtheme {

using nlohmann::json;

void RunConfig::apply_toy() {
  model.encoder = EncoderConfig::toy();
  model.max_len = 64;
  model.d_x = 16;
  model.token_vocab_size = 512;
}

json RunConfig::to_json() const {
  return {{"model", model.to_json()},
          {"train", train.to_json()},
          {"ranker", ranker.to_json()},
          {"seed", seed}};
}

std::string RunConfig::hash() const { return std::to_string(fnv1a64(to_json().dump())); }

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed,
                    const std::string& where) {
  if (!j.is_object()) throw ConfigError("config section '" + where + "' must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key))
      throw ConfigError("unknown config key '" + where + "." + key + "'");
}

}  // namespace

RunConfig RunConfig::from_json(const json& j) {
  RunConfig cfg;
  reject_unknown(j, {"model", "train", "ranker", "seed"}, "config");
  if (j.contains("model")) {
    reject_unknown(j.at("model"),
                   {"encoder", "features", "token_vocab_size", "max_len", "roi_dim",
                    "hard_targets"},
                   "model");
    if (j.at("model").contains("encoder"))
      reject_unknown(j.at("model").at("encoder"),
                     {"lang_layers", "obj_layers", "cross_layers", "dim", "heads", "ff_mult"},
                     "model.encoder");
    // Merge over defaults.
    json merged = cfg.model.to_json();
    merged.update(j.at("model"), true);
    cfg.model = ModelConfig::from_json(merged);
  }
  if (j.contains("train")) {
    reject_unknown(j.at("train"),
                   {"lr", "beta1", "beta2", "adam_eps", "batch_size", "epochs", "seed"},
                   "train");
    json merged = cfg.train.to_json();
    merged.update(j.at("train"));
    cfg.train = TrainConfig::from_json(merged);
  }
  if (j.contains("ranker")) {
    reject_unknown(j.at("ranker"),
                   {"top_interactions", "hidden", "lr", "rho", "adadelta_eps", "batch_size",
                    "epochs", "negatives_per_positive", "use_count_histogram",
                    "single_vector_query", "gate_wiki_only"},
                   "ranker");
    json merged = cfg.ranker.to_json();
    merged.update(j.at("ranker"));
    cfg.ranker = RankerConfig::from_json(merged);
  }
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned() && !j.at("seed").is_number_integer())
      throw ConfigError("config key 'seed' must be an integer");
    cfg.seed = j.at("seed").get<std::uint64_t>();
  }
  cfg.train.seed = cfg.seed;
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file '" + path + "'");
  json j;
  // An empty file means "all defaults".
  in >> std::ws;
  if (in.peek() == std::char_traits<char>::eof()) return RunConfig{};
  in.clear();
  in.seekg(0);
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config file '" + path + "': " + e.what());
  }
  return from_json(j);
}

}  // namespace adtheme
