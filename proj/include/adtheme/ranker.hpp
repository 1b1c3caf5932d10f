#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "adtheme/classifier.hpp"
#include "adtheme/corpus.hpp"
#include "adtheme/graph.hpp"
#include "adtheme/params.hpp"

namespace adtheme {

struct RankerConfig {
  int top_interactions = 5;  // length of the per-term interaction vector
  int hidden = 10;           // final hidden layer width of the term MLP
  double lr = 1.0;
  double rho = 0.95;
  double adadelta_eps = 1e-6;
  int batch_size = 300;
  int epochs = 10;
  int negatives_per_positive = 4;
  bool use_count_histogram = false;  // log-count bins instead of top-k cosines
  bool single_vector_query = false;  // query = joint embedding only
  bool gate_wiki_only = false;       // softmax gate over wiki-span terms only

  void validate() const;
  nlohmann::json to_json() const;
  static RankerConfig from_json(const nlohmann::json& j);
};

struct RankTriple {
  std::string query_id;
  ScoredKeyphrase positive;
  std::string negative;  // phrase text ranked strictly below positive
};

struct QueryRepr {
  Mat terms;              // T x d term vectors
  graph::Mask mask;       // 1 = term participates
  graph::Mask gate_mask;  // terms eligible for the softmax gate
};

// Ranker state: learned phrase-word embedding table (row 0 = the OOV word),
// term-gating vector and the per-term MLP.
struct RankerState {
  RankerConfig config;
  int term_dim = 0;
  std::vector<std::string> words;  // phrase words; index 0 is "[UNK]"
  ParamStore params;

  int word_index(const std::string& w) const;  // 0 when unknown
};

RankerState init_ranker(const RankerConfig& cfg, const KeyphraseVocab& vocab, int term_dim,
                        std::uint64_t seed);

void save_ranker(const RankerState& state, const std::string& path);
RankerState load_ranker(const std::string& path);

// Query terms from the (frozen) classifier model: the cross-modal language
// stream outputs including [CLS], or just the joint embedding when
// single_vector_query is set.
QueryRepr query_repr(const ModelState& model, const AdInstance& inst, const RankerConfig& cfg);

// Cosines between `term` and each phrase-word vector, sorted descending,
// padded with -1 to length k.
Eigen::RowVectorXd interaction_features(const Eigen::RowVectorXd& term, const Mat& phrase_terms,
                                        int k);

// Fixed-length log(1+count) histogram over [-1,1] cosine bins (the matching
// histogram alternative; not differentiable through the embeddings).
Eigen::RowVectorXd count_histogram(const Eigen::RowVectorXd& term, const Mat& phrase_terms,
                                   int bins);

// s = sum_i gate_i * MLP(interactions(term_i, phrase)).
double score(const QueryRepr& query, const std::vector<std::string>& phrase_words,
             const RankerState& state);

// Same computation on a tape for training; returns the 1 x 1 score node.
int score_node(graph::Tape& t, const NodeMap& p, const QueryRepr& query,
               const std::vector<std::string>& phrase_words, const RankerState& state);

// max(0, 1 - s_plus + s_minus).
double hinge_loss(double s_plus, double s_minus);

// (a) every ordered intra-label pair, (b) per label, seeded distinct
// unlabeled negatives from the vocabulary.
std::vector<RankTriple> sample_triples(const AdInstance& inst, const KeyphraseVocab& vocab,
                                       std::uint64_t seed, int negatives_per_positive);

struct RankerEpoch {
  int epoch = 0;
  double loss = 0;
  double val_ndcg5 = 0;
};

struct RankerResult {
  RankerState state;
  std::vector<RankerEpoch> history;
};

std::string ranker_history_csv(const std::vector<RankerEpoch>& history);

// Pairwise hinge training with adadelta over precomputed query
// representations; the encoder stays frozen.
RankerResult train_ranker(const Corpus& corpus, const CorpusSplit& split,
                          const ModelState& model, const RankerConfig& cfg, std::uint64_t seed);

struct RankedPhrase {
  std::string phrase;
  double score = 0;
};

// Candidates deduplicated, scored, sorted by descending score with
// lexicographic tie-breaking.
std::vector<RankedPhrase> rank_phrases(const QueryRepr& query,
                                       const std::vector<std::string>& candidates,
                                       const RankerState& state);

}  // namespace adtheme
