#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "adtheme/corpus.hpp"

namespace adtheme {

struct ModelConfig;
struct TrainConfig;
struct RankerConfig;

// Word -> vector map in the common text format: one line per word, the word
// followed by its space-separated components.
class WordVectorTable {
 public:
  static WordVectorTable load(const std::string& path);
  void insert(const std::string& word, Eigen::VectorXd vec);
  const Eigen::VectorXd* find(const std::string& word) const;
  int dim() const { return dim_; }
  std::size_t size() const { return vecs_.size(); }

  // Mean of the in-table word vectors; zero vector when every word is OOV.
  Eigen::VectorXd phrase_vector(const std::vector<std::string>& words) const;

 private:
  std::map<std::string, Eigen::VectorXd> vecs_;
  int dim_ = 0;
};

// Ladder score of the exactly-matching label, else 0.
double accuracy(const std::string& pred, const std::vector<ScoredKeyphrase>& labels);

// max over labels of cosine(avg-vec(pred), avg-vec(label)) * label score.
double similarity(const std::string& pred, const std::vector<ScoredKeyphrase>& labels,
                  const WordVectorTable& vectors);

// Top-3 label phrases by ladder score (ties by first appearance).
std::vector<std::string> label_top3(const std::vector<ScoredKeyphrase>& labels);

// |pred ∩ label| / 3.
double recall_vqa3(const std::vector<std::string>& pred_top3,
                   const std::vector<std::string>& label_top3);

struct RankScores {
  double p = 0;
  double r = 0;
  double ndcg = 0;
};

// P@K, R@K and NDCG@K (linear gain rel/log2(i+1), ideal from scores sorted
// descending) per requested cutoff. Empty relevant set -> zeros + warning.
std::map<int, RankScores> ranking_metrics(const std::vector<std::string>& ranked,
                                          const std::vector<ScoredKeyphrase>& relevant,
                                          const std::vector<int>& ks);

enum class AblationMode { Classification, Ranking };

struct AblationRow {
  std::string feature_set;
  bool ok = false;
  std::string error;
  std::map<std::string, double> metrics;    // mean over seeds
  std::map<std::string, double> reference;  // full-scale reference results
};

struct EvalReport {
  std::string mode;
  std::vector<std::uint64_t> seeds;
  std::string config_hash;
  std::vector<AblationRow> rows;
  // Per-category metrics of the first feature set's first-seed model.
  std::map<std::string, std::map<std::string, double>> per_category;

  nlohmann::json to_json() const;
  std::string to_table() const;
};

// Published results at full industrial scale, attached to report rows for
// orientation (not targets at desk scale).
const std::map<std::string, double>* full_scale_reference(AblationMode mode,
                                                          FeatureSet fs);

struct AblationConfig {
  std::vector<FeatureSet> feature_sets;
  AblationMode mode = AblationMode::Classification;
  std::vector<std::uint64_t> seeds;
  const WordVectorTable* word_vectors = nullptr;  // optional
};

// Trains and evaluates one model per (feature set, seed); rows carry the
// mean over seeds. One row's failure is recorded without stopping the rest.
EvalReport run_ablation(const Corpus& corpus, const CorpusSplit& split,
                        const ModelConfig& mcfg, const TrainConfig& tcfg,
                        const RankerConfig& rcfg, const AblationConfig& acfg);

// lift = (full - base) / base per category and metric; null when base = 0.
nlohmann::json category_lift(const EvalReport& base, const EvalReport& full);

}  // namespace adtheme
