#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "adtheme/corpus.hpp"
#include "adtheme/encoder.hpp"
#include "adtheme/graph.hpp"
#include "adtheme/params.hpp"
#include "adtheme/textpipe.hpp"

namespace adtheme {

class WordVectorTable;  // evalkit

struct ModelConfig {
  EncoderConfig encoder;
  FeatureSet features = FeatureSet::IxQWO;
  int token_vocab_size = 2000;
  int max_len = 128;
  int d_x = 16;               // expected RoI feature width
  bool hard_targets = false;  // top-score one-hot instead of soft targets

  void validate() const;
  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

// Everything a trained classifier run needs to reproduce predictions.
struct ModelState {
  ModelConfig config;
  TokenVocab tokens;
  KeyphraseVocab phrases;
  ParamStore params;
};

// Fresh parameters: encoder blocks plus token/position embeddings, the
// visual projections and the classification head.
ModelState init_model(const ModelConfig& cfg, TokenVocab tokens, KeyphraseVocab phrases,
                      std::uint64_t seed);

// `extra_meta` entries land in the checkpoint header (e.g. the split seed);
// reserved keys like "kind" cannot be overridden.
void save_model(const ModelState& state, const std::string& path,
                const nlohmann::json& extra_meta = nlohmann::json::object());
ModelState load_model(const std::string& path);

// Tape forward for one instance under the state's feature set. Returns node
// ids into `t`.
struct ForwardNodes {
  int e = -1;      // 1 x d joint embedding
  int lang = -1;   // l x d language stream output
  int vis = -1;    // n x d visual stream output (-1 when text-only)
  int logits = -1; // 1 x K
  graph::Mask lang_mask;
};
ForwardNodes build_forward(graph::Tape& t, const NodeMap& p, const ModelState& state,
                           const AdInstance& inst);

// Plain forward: joint embedding and class probabilities for one instance.
JointEmbedding embed_instance(const ModelState& state, const AdInstance& inst);
Eigen::RowVectorXd predict_probs(const ModelState& state, const AdInstance& inst);

struct ClassifierHead {
  Mat w;  // d x K
  Mat b;  // 1 x K
};

// softmax(e W + b) with max-subtraction; sums to 1.
Eigen::RowVectorXd classify(const Eigen::RowVectorXd& e, const ClassifierHead& head);

// Soft target: score_k / sum(scores) on the instance's labels, 0 elsewhere.
Eigen::RowVectorXd target_distribution(const std::vector<ScoredKeyphrase>& labels,
                                       const KeyphraseVocab& vocab, bool hard);

// Cross entropy of `probs` against the soft target built from `labels`.
double classification_loss(const Eigen::RowVectorXd& probs,
                           const std::vector<ScoredKeyphrase>& labels,
                           const KeyphraseVocab& vocab);

// Phrases by descending probability; ties broken by ascending vocab index.
std::vector<std::string> predict_topk(const Eigen::RowVectorXd& probs,
                                      const KeyphraseVocab& vocab, int k);

struct TrainConfig {
  double lr = 5e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int batch_size = 32;
  int epochs = 4;
  std::uint64_t seed = 7;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

struct EpochStats {
  int epoch = 0;
  std::string split;  // "train" or "val"
  double loss = 0;
  double accuracy = 0;
  double similarity = 0;
  double r_vqa3 = 0;
};

struct TrainResult {
  ModelState state;
  std::vector<EpochStats> history;
};

std::string history_csv(const std::vector<EpochStats>& history);

// Mini-batch adam on the soft-target cross entropy. `word_vectors` feeds the
// similarity column of the history; rows are 0 when absent.
TrainResult train_classifier(const Corpus& corpus, const CorpusSplit& split,
                             const ModelConfig& mcfg, const TrainConfig& tcfg,
                             const WordVectorTable* word_vectors = nullptr);

// Mean loss/accuracy/similarity/r_vqa3 over the given instance ids.
EpochStats evaluate_classifier(const ModelState& state, const Corpus& corpus,
                               const std::vector<std::string>& ids,
                               const WordVectorTable* word_vectors = nullptr);

struct AggregatedPhrase {
  std::string phrase;
  double score = 0;  // summed probability mass
};

// Sums predicted probability vectors over the instances of a brand (falling
// back to category match), then ranks with the predict_topk tie rule.
std::vector<AggregatedPhrase> recommend_for_brand(const ModelState& state, const Corpus& corpus,
                                                  const std::string& brand_or_category, int k);

}  // namespace adtheme
