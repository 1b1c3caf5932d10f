#include "adtheme/ranker.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <set>
#include <sstream>

#include "adtheme/checkpoint.hpp"
#include "adtheme/errors.hpp"
#include "adtheme/evalkit.hpp"
#include "adtheme/optim.hpp"
#include "adtheme/rng.hpp"

namespace adtheme {

using graph::Mask;
using graph::Tape;
using nlohmann::json;

void RankerConfig::validate() const {
  if (top_interactions < 1) throw ConfigError("top_interactions must be >= 1");
  if (hidden < 1) throw ConfigError("ranker hidden width must be >= 1");
  if (!(lr >= 0)) throw ConfigError("ranker learning rate must be >= 0");
  if (batch_size < 1) throw ConfigError("ranker batch size must be >= 1");
  if (epochs < 0) throw ConfigError("ranker epochs must be >= 0");
  if (negatives_per_positive < 0) throw ConfigError("negatives_per_positive must be >= 0");
}

json RankerConfig::to_json() const {
  return {{"top_interactions", top_interactions},
          {"hidden", hidden},
          {"lr", lr},
          {"rho", rho},
          {"adadelta_eps", adadelta_eps},
          {"batch_size", batch_size},
          {"epochs", epochs},
          {"negatives_per_positive", negatives_per_positive},
          {"use_count_histogram", use_count_histogram},
          {"single_vector_query", single_vector_query},
          {"gate_wiki_only", gate_wiki_only}};
}

RankerConfig RankerConfig::from_json(const json& j) {
  RankerConfig cfg;
  cfg.top_interactions = j.value("top_interactions", cfg.top_interactions);
  cfg.hidden = j.value("hidden", cfg.hidden);
  cfg.lr = j.value("lr", cfg.lr);
  cfg.rho = j.value("rho", cfg.rho);
  cfg.adadelta_eps = j.value("adadelta_eps", cfg.adadelta_eps);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.epochs = j.value("epochs", cfg.epochs);
  cfg.negatives_per_positive = j.value("negatives_per_positive", cfg.negatives_per_positive);
  cfg.use_count_histogram = j.value("use_count_histogram", cfg.use_count_histogram);
  cfg.single_vector_query = j.value("single_vector_query", cfg.single_vector_query);
  cfg.gate_wiki_only = j.value("gate_wiki_only", cfg.gate_wiki_only);
  cfg.validate();
  return cfg;
}

int RankerState::word_index(const std::string& w) const {
  for (std::size_t i = 1; i < words.size(); ++i)
    if (words[i] == w) return static_cast<int>(i);
  return 0;
}

RankerState init_ranker(const RankerConfig& cfg, const KeyphraseVocab& vocab, int term_dim,
                        std::uint64_t seed) {
  cfg.validate();
  if (term_dim < 1) throw ConfigError("ranker term dim must be >= 1");
  RankerState state;
  state.config = cfg;
  state.term_dim = term_dim;

  std::set<std::string> words;
  for (const auto& phrase : vocab.phrases())
    for (const auto& w : split_phrase(phrase)) words.insert(w);
  state.words.push_back("[UNK]");
  state.words.insert(state.words.end(), words.begin(), words.end());

  Rng rng = Rng::stream(seed, "rank-init");
  auto weight = [&rng](int rows, int cols, double stddev) {
    Mat w(rows, cols);
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = rng.trunc_normal_f32(stddev);
    return w;
  };
  state.params.insert("rank.terms",
                      weight(static_cast<int>(state.words.size()), term_dim, 0.1));
  state.params.insert("rank.gate", weight(term_dim, 1, 0.1));
  state.params.insert("rank.mlp.w1", weight(cfg.top_interactions, cfg.hidden, 0.3));
  state.params.insert("rank.mlp.b1", Mat::Zero(1, cfg.hidden));
  state.params.insert("rank.mlp.w2", weight(cfg.hidden, 1, 0.3));
  state.params.insert("rank.mlp.b2", Mat::Zero(1, 1));
  return state;
}

void save_ranker(const RankerState& state, const std::string& path) {
  json meta;
  meta["kind"] = "ranker";
  meta["config"] = state.config.to_json();
  meta["term_dim"] = state.term_dim;
  meta["words"] = state.words;
  save_checkpoint(path, meta, state.params);
}

RankerState load_ranker(const std::string& path) {
  Checkpoint ck = load_checkpoint(path);
  if (ck.meta.value("kind", "") != "ranker")
    throw DataError("checkpoint '" + path + "' is not a ranker");
  RankerState state;
  state.config = RankerConfig::from_json(ck.meta.at("config"));
  state.term_dim = ck.meta.at("term_dim").get<int>();
  for (const auto& w : ck.meta.at("words")) state.words.push_back(w.get<std::string>());
  state.params = std::move(ck.params);
  return state;
}

namespace {

// Index span of the Wikipedia segment inside the tokenized composed text,
// found by tokenizing the composition without it and measuring the overhang.
Mask wiki_gate_mask(const ModelState& model, const AdInstance& inst, std::size_t total_len) {
  Mask gate(total_len, 0);
  if (!uses_wiki(model.config.features) || inst.wiki_text.empty()) return gate;
  AdInstance stripped = inst;
  stripped.wiki_text.clear();
  TokenSequence prefix = tokenize(compose_text(stripped, model.config.features), model.tokens,
                                  model.config.max_len);
  // prefix ends "... [SEP]"; the full text continues "wiki... [SEP]".
  for (std::size_t i = prefix.ids.size(); i + 1 < total_len; ++i) gate[i] = 1;
  return gate;
}

}  // namespace

QueryRepr query_repr(const ModelState& model, const AdInstance& inst, const RankerConfig& cfg) {
  JointEmbedding j = embed_instance(model, inst);
  QueryRepr q;
  if (cfg.single_vector_query) {
    q.terms = j.e;
    q.mask.assign(1, 1);
    q.gate_mask = q.mask;
    return q;
  }
  q.terms = j.lang_tokens;
  q.mask.assign(static_cast<std::size_t>(j.lang_tokens.rows()), 1);
  q.gate_mask = q.mask;
  if (cfg.gate_wiki_only) {
    Mask wiki = wiki_gate_mask(model, inst, q.mask.size());
    bool any = false;
    for (auto b : wiki) any = any || b;
    if (any) q.gate_mask = wiki;  // fall back to all terms when no wiki span
  }
  return q;
}

Eigen::RowVectorXd interaction_features(const Eigen::RowVectorXd& term, const Mat& phrase_terms,
                                        int k) {
  if (phrase_terms.rows() == 0) throw ShapeError("interaction_features on empty phrase");
  std::vector<double> cos;
  for (Eigen::Index i = 0; i < phrase_terms.rows(); ++i)
    cos.push_back(graph::cosine(term.transpose(), phrase_terms.row(i).transpose()));
  std::stable_sort(cos.begin(), cos.end(), std::greater<double>());
  Eigen::RowVectorXd out = Eigen::RowVectorXd::Constant(k, -1.0);
  for (int i = 0; i < k && i < static_cast<int>(cos.size()); ++i)
    out(i) = cos[static_cast<std::size_t>(i)];
  return out;
}

Eigen::RowVectorXd count_histogram(const Eigen::RowVectorXd& term, const Mat& phrase_terms,
                                   int bins) {
  if (phrase_terms.rows() == 0) throw ShapeError("count_histogram on empty phrase");
  Eigen::RowVectorXd counts = Eigen::RowVectorXd::Zero(bins);
  for (Eigen::Index i = 0; i < phrase_terms.rows(); ++i) {
    double c = graph::cosine(term.transpose(), phrase_terms.row(i).transpose());
    int b = std::min(bins - 1, static_cast<int>((c + 1.0) / 2.0 * bins));
    counts(std::max(0, b)) += 1.0;
  }
  for (int b = 0; b < bins; ++b) counts(b) = std::log1p(counts(b));
  return counts;
}

namespace {

Mat phrase_term_matrix(const std::vector<std::string>& words, const RankerState& state) {
  if (words.empty()) throw ShapeError("scoring an empty phrase");
  const Mat& table = state.params.at("rank.terms");
  Mat m(static_cast<Eigen::Index>(words.size()), table.cols());
  for (std::size_t i = 0; i < words.size(); ++i)
    m.row(static_cast<Eigen::Index>(i)) = table.row(state.word_index(words[i]));
  return m;
}

std::vector<int> phrase_word_ids(const std::vector<std::string>& words,
                                 const RankerState& state) {
  std::vector<int> ids;
  for (const auto& w : words) ids.push_back(state.word_index(w));
  return ids;
}

}  // namespace

double score(const QueryRepr& query, const std::vector<std::string>& phrase_words,
             const RankerState& state) {
  if (query.terms.rows() == 0) throw ShapeError("scoring an empty query");
  const RankerConfig& cfg = state.config;
  Mat phrase = phrase_term_matrix(phrase_words, state);
  const Mat& w1 = state.params.at("rank.mlp.w1");
  const Mat& b1 = state.params.at("rank.mlp.b1");
  const Mat& w2 = state.params.at("rank.mlp.w2");
  const Mat& b2 = state.params.at("rank.mlp.b2");
  const Mat& gate = state.params.at("rank.gate");

  Mat gate_logits = query.terms * gate;  // T x 1
  Mask gmask = query.gate_mask.empty() ? query.mask : query.gate_mask;
  Mat g = graph::softmax_rows_plain(gate_logits.transpose(), gmask);  // 1 x T

  double s = 0;
  for (Eigen::Index i = 0; i < query.terms.rows(); ++i) {
    if (g(0, i) == 0) continue;
    Eigen::RowVectorXd z = cfg.use_count_histogram
                               ? count_histogram(query.terms.row(i), phrase, cfg.top_interactions)
                               : interaction_features(query.terms.row(i), phrase,
                                                      cfg.top_interactions);
    Eigen::RowVectorXd h = ((z * w1) + b1).array().tanh();
    double mlp = ((h * w2) + b2)(0, 0);
    s += g(0, i) * mlp;
  }
  return s;
}

int score_node(Tape& t, const NodeMap& p, const QueryRepr& query,
               const std::vector<std::string>& phrase_words, const RankerState& state) {
  if (query.terms.rows() == 0) throw ShapeError("scoring an empty query");
  const RankerConfig& cfg = state.config;
  int terms = t.leaf(query.terms);
  int phrase = t.gather_rows(p.at("rank.terms"), phrase_word_ids(phrase_words, state));

  std::vector<int> mlp_outs;
  for (Eigen::Index i = 0; i < query.terms.rows(); ++i) {
    int z;
    if (cfg.use_count_histogram) {
      // Counting is piecewise constant in the embeddings: enters as a leaf.
      z = t.leaf(count_histogram(query.terms.row(i), t.value(phrase), cfg.top_interactions));
    } else {
      z = t.topk_cosines(t.row(terms, static_cast<int>(i)), phrase, cfg.top_interactions);
    }
    int h = t.tanh_act(t.add_rowvec(t.matmul(z, p.at("rank.mlp.w1")), p.at("rank.mlp.b1")));
    mlp_outs.push_back(t.add_rowvec(t.matmul(h, p.at("rank.mlp.w2")), p.at("rank.mlp.b2")));
  }
  int gate_logits = t.transpose(t.matmul(terms, p.at("rank.gate")));  // 1 x T
  Mask gmask = query.gate_mask.empty() ? query.mask : query.gate_mask;
  int g = t.softmax_rows(gate_logits, gmask);
  return t.matmul(g, t.vcat(mlp_outs));  // 1 x 1
}

double hinge_loss(double s_plus, double s_minus) {
  return std::max(0.0, 1.0 - s_plus + s_minus);
}

std::vector<RankTriple> sample_triples(const AdInstance& inst, const KeyphraseVocab& vocab,
                                       std::uint64_t seed, int negatives_per_positive) {
  if (inst.labels.empty()) throw DataError("sample_triples on an unlabeled instance");
  std::vector<RankTriple> triples;
  for (const auto& hi : inst.labels)
    for (const auto& lo : inst.labels)
      if (hi.score > lo.score) triples.push_back({inst.id, hi, lo.text()});

  std::set<std::string> labeled;
  for (const auto& l : inst.labels) labeled.insert(l.text());
  std::vector<std::string> unlabeled;
  for (const auto& phrase : vocab.phrases())
    if (!labeled.count(phrase)) unlabeled.push_back(phrase);

  if (unlabeled.empty()) {
    if (triples.empty())
      std::cerr << "warning: no rankable pair for instance '" << inst.id << "'\n";
    return triples;
  }
  Rng rng = Rng::stream(fnv1a64(inst.id, seed), "sampling");
  for (const auto& label : inst.labels) {
    std::vector<std::string> pool = unlabeled;
    rng.shuffle(pool);
    const auto take = std::min<std::size_t>(pool.size(),
                                            static_cast<std::size_t>(negatives_per_positive));
    for (std::size_t i = 0; i < take; ++i) triples.push_back({inst.id, label, pool[i]});
  }
  return triples;
}

std::string ranker_history_csv(const std::vector<RankerEpoch>& history) {
  std::ostringstream os;
  os << "epoch,loss,val_ndcg5\n";
  os.precision(17);
  for (const auto& row : history)
    os << row.epoch << ',' << row.loss << ',' << row.val_ndcg5 << "\n";
  return os.str();
}

namespace {

double mean_ndcg5(const RankerState& state, const Corpus& corpus,
                  const std::vector<std::string>& ids, const KeyphraseVocab& vocab,
                  const std::map<std::string, QueryRepr>& reprs) {
  if (ids.empty()) return 0;
  double total = 0;
  for (const auto& id : ids) {
    const AdInstance& inst = corpus.by_id(id);
    auto ranked = rank_phrases(reprs.at(id), vocab.phrases(), state);
    std::vector<std::string> order;
    for (const auto& r : ranked) order.push_back(r.phrase);
    total += ranking_metrics(order, inst.labels, {5}).at(5).ndcg;
  }
  return total / static_cast<double>(ids.size());
}

}  // namespace

RankerResult train_ranker(const Corpus& corpus, const CorpusSplit& split,
                          const ModelState& model, const RankerConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (split.train.empty()) throw DataError("ranker training split is empty");
  KeyphraseVocab vocab = build_vocab(corpus);

  RankerResult result{init_ranker(cfg, vocab, model.config.encoder.d, seed), {}};
  RankerState& state = result.state;

  // The encoder is frozen: query representations are computed once.
  std::map<std::string, QueryRepr> reprs;
  for (const auto& id : split.train) reprs[id] = query_repr(model, corpus.by_id(id), cfg);
  for (const auto& id : split.val) reprs[id] = query_repr(model, corpus.by_id(id), cfg);

  std::vector<RankTriple> triples;
  for (const auto& id : split.train) {
    auto batch = sample_triples(corpus.by_id(id), vocab, seed, cfg.negatives_per_positive);
    triples.insert(triples.end(), batch.begin(), batch.end());
  }
  if (triples.empty()) throw DataError("no training triples could be formed");

  Adadelta opt(cfg.lr, cfg.rho, cfg.adadelta_eps);
  Rng order = Rng::stream(seed, "rank-order");
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    order.shuffle(triples);
    double epoch_loss = 0;
    for (std::size_t start = 0; start < triples.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop =
          std::min(triples.size(), start + static_cast<std::size_t>(cfg.batch_size));
      Tape t;
      NodeMap p = register_params(t, state.params);
      std::vector<int> losses;
      for (std::size_t i = start; i < stop; ++i) {
        const RankTriple& tr = triples[i];
        int s_plus = score_node(t, p, reprs.at(tr.query_id), tr.positive.phrase, state);
        int s_minus = score_node(t, p, reprs.at(tr.query_id), split_phrase(tr.negative), state);
        losses.push_back(t.relu(t.add_const(t.sub(s_minus, s_plus), 1.0)));
      }
      int batch_loss =
          t.scale(t.sum_all(t.vcat(losses)), 1.0 / static_cast<double>(losses.size()));
      const double lv = t.scalar(batch_loss);
      if (!std::isfinite(lv)) throw NumericError("ranker loss became non-finite");
      epoch_loss += lv * static_cast<double>(losses.size());
      t.backward(batch_loss);
      opt.step(state.params, collect_grads(t, p, state.params));
    }
    RankerEpoch row;
    row.epoch = epoch;
    row.loss = epoch_loss / static_cast<double>(triples.size());
    row.val_ndcg5 = mean_ndcg5(state, corpus, split.val, vocab, reprs);
    result.history.push_back(row);
  }
  return result;
}

std::vector<RankedPhrase> rank_phrases(const QueryRepr& query,
                                       const std::vector<std::string>& candidates,
                                       const RankerState& state) {
  if (candidates.empty()) throw DataError("rank_phrases needs at least one candidate");
  std::set<std::string> unique(candidates.begin(), candidates.end());
  std::vector<RankedPhrase> out;
  for (const auto& phrase : unique)
    out.push_back({phrase, score(query, split_phrase(phrase), state)});
  std::stable_sort(out.begin(), out.end(), [](const RankedPhrase& a, const RankedPhrase& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.phrase < b.phrase;
  });
  return out;
}

}  // namespace adtheme
