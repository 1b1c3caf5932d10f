#include "adtheme/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "adtheme/errors.hpp"
#include "adtheme/evalkit.hpp"
#include "adtheme/checkpoint.hpp"
#include "adtheme/optim.hpp"
#include "adtheme/rng.hpp"
#include "adtheme/vispipe.hpp"

namespace adtheme {

using graph::Mask;
using graph::Tape;
using nlohmann::json;

void ModelConfig::validate() const {
  encoder.validate();
  if (token_vocab_size < 8) throw ConfigError("token vocab size must be >= 8");
  if (max_len < 2) throw ConfigError("max_len must be >= 2");
  if (d_x < 1) throw ConfigError("RoI feature width must be >= 1");
}

json ModelConfig::to_json() const {
  return {{"encoder",
           {{"lang_layers", encoder.lang_layers},
            {"obj_layers", encoder.obj_layers},
            {"cross_layers", encoder.cross_layers},
            {"dim", encoder.d},
            {"heads", encoder.heads},
            {"ff_mult", encoder.ff_mult}}},
          {"features", to_string(features)},
          {"token_vocab_size", token_vocab_size},
          {"max_len", max_len},
          {"roi_dim", d_x},
          {"hard_targets", hard_targets}};
}

ModelConfig ModelConfig::from_json(const json& j) {
  ModelConfig cfg;
  if (j.contains("encoder")) {
    const auto& e = j.at("encoder");
    cfg.encoder.lang_layers = e.value("lang_layers", cfg.encoder.lang_layers);
    cfg.encoder.obj_layers = e.value("obj_layers", cfg.encoder.obj_layers);
    cfg.encoder.cross_layers = e.value("cross_layers", cfg.encoder.cross_layers);
    cfg.encoder.d = e.value("dim", cfg.encoder.d);
    cfg.encoder.heads = e.value("heads", cfg.encoder.heads);
    cfg.encoder.ff_mult = e.value("ff_mult", cfg.encoder.ff_mult);
  }
  cfg.features = feature_set_from_string(j.value("features", to_string(cfg.features)));
  cfg.token_vocab_size = j.value("token_vocab_size", cfg.token_vocab_size);
  cfg.max_len = j.value("max_len", cfg.max_len);
  cfg.d_x = j.value("roi_dim", cfg.d_x);
  cfg.hard_targets = j.value("hard_targets", cfg.hard_targets);
  cfg.validate();
  return cfg;
}

ModelState init_model(const ModelConfig& cfg, TokenVocab tokens, KeyphraseVocab phrases,
                      std::uint64_t seed) {
  cfg.validate();
  if (phrases.size() == 0) throw DataError("keyphrase vocabulary is empty");
  ModelState state;
  state.config = cfg;
  state.tokens = std::move(tokens);
  state.phrases = std::move(phrases);

  Rng rng = Rng::stream(seed, "init");
  auto weight = [&rng](int rows, int cols) {
    Mat w(rows, cols);
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = rng.trunc_normal_f32(0.02);
    return w;
  };

  state.params.insert("embed.token", weight(static_cast<int>(state.tokens.size()), cfg.encoder.d));
  state.params.insert("embed.pos", weight(cfg.max_len, cfg.encoder.d));
  state.params.insert("vis.wx", weight(cfg.d_x, cfg.encoder.d));
  state.params.insert("vis.bx", Mat::Zero(1, cfg.encoder.d));
  state.params.insert("vis.wr", weight(5, cfg.encoder.d));
  state.params.insert("vis.br", Mat::Zero(1, cfg.encoder.d));
  add_encoder_params(state.params, cfg.encoder, rng);
  state.params.insert("head.w", weight(cfg.encoder.d, static_cast<int>(state.phrases.size())));
  state.params.insert("head.b", Mat::Zero(1, static_cast<int>(state.phrases.size())));
  return state;
}

void save_model(const ModelState& state, const std::string& path, const json& extra_meta) {
  json meta = extra_meta.is_object() ? extra_meta : json::object();
  meta["kind"] = "classifier";
  meta["config"] = state.config.to_json();
  json toks = json::array();
  for (std::size_t i = 0; i < state.tokens.size(); ++i)
    toks.push_back(state.tokens.piece(static_cast<int>(i)));
  meta["token_vocab"] = toks;
  meta["phrase_vocab"] = state.phrases.phrases();
  save_checkpoint(path, meta, state.params);
}

ModelState load_model(const std::string& path) {
  Checkpoint ck = load_checkpoint(path);
  if (ck.meta.value("kind", "") != "classifier")
    throw DataError("checkpoint '" + path + "' is not a classifier model");
  ModelState state;
  state.config = ModelConfig::from_json(ck.meta.at("config"));
  {
    std::vector<std::string> pieces;
    for (const auto& t : ck.meta.at("token_vocab")) pieces.push_back(t.get<std::string>());
    state.tokens = TokenVocab::from_pieces(pieces);
  }
  {
    std::vector<std::string> phrases;
    for (const auto& p : ck.meta.at("phrase_vocab")) phrases.push_back(p.get<std::string>());
    state.phrases = KeyphraseVocab::from_phrases(std::move(phrases));
  }
  state.params = std::move(ck.params);
  return state;
}

ForwardNodes build_forward(Tape& t, const NodeMap& p, const ModelState& state,
                           const AdInstance& inst) {
  const ModelConfig& cfg = state.config;
  const FeatureSet fs = cfg.features;

  TokenSequence seq = tokenize(compose_text(inst, fs), state.tokens, cfg.max_len);
  ForwardNodes out;
  out.lang_mask.assign(seq.ids.size(), 1);

  int h_tok = t.gather_rows(p.at("embed.token"), seq.ids);
  int h_pos = t.gather_rows(p.at("embed.pos"), seq.positions);
  int h = t.scale(t.add(h_tok, h_pos), 0.5);
  int lang = build::encoder_stack(t, p, "enc.lang", h, out.lang_mask, cfg.encoder.lang_layers,
                                  cfg.encoder.heads);

  int vis = -1;
  Mask vmask;
  if (uses_image(fs)) {
    RegionSet rs = region_set(inst);
    if (rs.x.cols() != cfg.d_x)
      throw ShapeError("instance '" + inst.id + "' RoI width " + std::to_string(rs.x.cols()) +
                       " does not match model width " + std::to_string(cfg.d_x));
    int fx = t.add_rowvec(t.matmul(t.leaf(rs.x), p.at("vis.wx")), p.at("vis.bx"));
    int fr = t.add_rowvec(t.matmul(t.leaf(rs.r), p.at("vis.wr")), p.at("vis.br"));
    int v = t.scale(t.add(fx, fr), 0.5);
    vmask.assign(static_cast<std::size_t>(rs.x.rows()), 1);
    vis = build::encoder_stack(t, p, "enc.obj", v, vmask, cfg.encoder.obj_layers,
                               cfg.encoder.heads);
  }

  if (fs == FeatureSet::QWO || vis < 0) {
    out.lang = lang;
    out.e = t.row(lang, 0);
  } else if (fs == FeatureSet::NonCrossModal) {
    out.lang = lang;
    out.vis = vis;
    out.e = t.add(t.masked_mean_rows(lang, out.lang_mask), t.masked_mean_rows(vis, vmask));
  } else {
    auto cx = build::cross_stack(t, p, lang, vis, out.lang_mask, vmask,
                                 cfg.encoder.cross_layers, cfg.encoder.heads);
    out.lang = cx.lang;
    out.vis = cx.vis;
    out.e = t.row(cx.lang, 0);
  }
  out.logits = t.add_rowvec(t.matmul(out.e, p.at("head.w")), p.at("head.b"));
  return out;
}

JointEmbedding embed_instance(const ModelState& state, const AdInstance& inst) {
  Tape t;
  NodeMap p = register_params(t, state.params);
  ForwardNodes f = build_forward(t, p, state, inst);
  JointEmbedding j;
  j.e = t.value(f.e).row(0);
  j.lang_tokens = t.value(f.lang);
  if (f.vis >= 0) j.vis_tokens = t.value(f.vis);
  return j;
}

Eigen::RowVectorXd predict_probs(const ModelState& state, const AdInstance& inst) {
  Tape t;
  NodeMap p = register_params(t, state.params);
  ForwardNodes f = build_forward(t, p, state, inst);
  Mat logits = t.value(f.logits);
  Mask all(static_cast<std::size_t>(logits.cols()), 1);
  return graph::softmax_rows_plain(logits, all).row(0);
}

Eigen::RowVectorXd classify(const Eigen::RowVectorXd& e, const ClassifierHead& head) {
  if (e.cols() != head.w.rows() || head.w.cols() != head.b.cols())
    throw ShapeError("classifier head shapes disagree");
  Mat logits = e * head.w + head.b;
  Mask all(static_cast<std::size_t>(logits.cols()), 1);
  return graph::softmax_rows_plain(logits, all).row(0);
}

Eigen::RowVectorXd target_distribution(const std::vector<ScoredKeyphrase>& labels,
                                       const KeyphraseVocab& vocab, bool hard) {
  if (labels.empty()) throw DataError("instance without labels");
  Eigen::RowVectorXd target = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(vocab.size()));
  if (hard) {
    const ScoredKeyphrase* best = &labels.front();
    for (const auto& l : labels)
      if (l.score > best->score) best = &l;
    int idx = vocab.index(best->text());
    if (idx < 0) throw DataError("label phrase '" + best->text() + "' missing from vocabulary");
    target(idx) = 1.0;
    return target;
  }
  double total = 0;
  for (const auto& l : labels) total += l.score;
  for (const auto& l : labels) {
    int idx = vocab.index(l.text());
    if (idx < 0) throw DataError("label phrase '" + l.text() + "' missing from vocabulary");
    target(idx) = l.score / total;
  }
  return target;
}

double classification_loss(const Eigen::RowVectorXd& probs,
                           const std::vector<ScoredKeyphrase>& labels,
                           const KeyphraseVocab& vocab) {
  Eigen::RowVectorXd target = target_distribution(labels, vocab, false);
  double loss = 0;
  for (Eigen::Index k = 0; k < probs.cols(); ++k) {
    if (target(k) == 0) continue;
    if (probs(k) <= 0) throw NumericError("zero probability on a target class");
    loss -= target(k) * std::log(probs(k));
  }
  return loss;
}

std::vector<std::string> predict_topk(const Eigen::RowVectorXd& probs,
                                      const KeyphraseVocab& vocab, int k) {
  if (k < 1 || k > static_cast<int>(vocab.size()))
    throw ConfigError("top-k must lie in [1, vocab size]");
  if (probs.cols() != static_cast<Eigen::Index>(vocab.size()))
    throw ShapeError("probability vector does not match vocabulary");
  std::vector<int> idx(vocab.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return probs(a) > probs(b); });
  std::vector<std::string> out;
  for (int i = 0; i < k; ++i) out.push_back(vocab.phrase(idx[static_cast<std::size_t>(i)]));
  return out;
}

void TrainConfig::validate() const {
  if (!(lr >= 0)) throw ConfigError("learning rate must be >= 0");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
}

json TrainConfig::to_json() const {
  return {{"lr", lr},         {"beta1", beta1},          {"beta2", beta2},
          {"adam_eps", adam_eps}, {"batch_size", batch_size}, {"epochs", epochs},
          {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const json& j) {
  TrainConfig cfg;
  cfg.lr = j.value("lr", cfg.lr);
  cfg.beta1 = j.value("beta1", cfg.beta1);
  cfg.beta2 = j.value("beta2", cfg.beta2);
  cfg.adam_eps = j.value("adam_eps", cfg.adam_eps);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.epochs = j.value("epochs", cfg.epochs);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.validate();
  return cfg;
}

std::string history_csv(const std::vector<EpochStats>& history) {
  std::ostringstream os;
  os << "epoch,split,loss,accuracy,similarity,r_vqa3\n";
  os.precision(17);
  for (const auto& row : history)
    os << row.epoch << ',' << row.split << ',' << row.loss << ',' << row.accuracy << ','
       << row.similarity << ',' << row.r_vqa3 << "\n";
  return os.str();
}

EpochStats evaluate_classifier(const ModelState& state, const Corpus& corpus,
                               const std::vector<std::string>& ids,
                               const WordVectorTable* word_vectors) {
  if (ids.empty()) throw DataError("evaluate_classifier over an empty id list");
  EpochStats s;
  for (const auto& id : ids) {
    const AdInstance& inst = corpus.by_id(id);
    Eigen::RowVectorXd probs = predict_probs(state, inst);
    s.loss += classification_loss(probs, inst.labels, state.phrases);
    auto top3 = predict_topk(probs, state.phrases, std::min<int>(3, static_cast<int>(state.phrases.size())));
    s.accuracy += accuracy(top3.front(), inst.labels);
    if (word_vectors) s.similarity += similarity(top3.front(), inst.labels, *word_vectors);
    s.r_vqa3 += recall_vqa3(top3, label_top3(inst.labels));
  }
  const double n = static_cast<double>(ids.size());
  s.loss /= n;
  s.accuracy /= n;
  s.similarity /= n;
  s.r_vqa3 /= n;
  return s;
}

TrainResult train_classifier(const Corpus& corpus, const CorpusSplit& split,
                             const ModelConfig& mcfg, const TrainConfig& tcfg,
                             const WordVectorTable* word_vectors) {
  tcfg.validate();
  if (split.train.empty()) throw DataError("training split is empty");

  std::vector<std::string> texts;
  for (const auto& id : split.train)
    texts.push_back(compose_text(corpus.by_id(id), mcfg.features));
  TokenVocab tokens = TokenVocab::build(texts, static_cast<std::size_t>(mcfg.token_vocab_size));
  KeyphraseVocab phrases = build_vocab(corpus);

  TrainResult result{init_model(mcfg, std::move(tokens), std::move(phrases), tcfg.seed), {}};
  ModelState& state = result.state;

  Adam adam(tcfg.lr, tcfg.beta1, tcfg.beta2, tcfg.adam_eps);
  Rng order = Rng::stream(tcfg.seed, "order");
  std::vector<std::string> ids = split.train;

  for (int epoch = 1; epoch <= tcfg.epochs; ++epoch) {
    order.shuffle(ids);
    double epoch_loss = 0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < ids.size(); start += static_cast<std::size_t>(tcfg.batch_size)) {
      const std::size_t stop = std::min(ids.size(), start + static_cast<std::size_t>(tcfg.batch_size));
      Tape t;
      NodeMap p = register_params(t, state.params);
      std::vector<int> losses;
      for (std::size_t i = start; i < stop; ++i) {
        const AdInstance& inst = corpus.by_id(ids[i]);
        ForwardNodes f = build_forward(t, p, state, inst);
        Eigen::RowVectorXd target =
            target_distribution(inst.labels, state.phrases, mcfg.hard_targets);
        losses.push_back(t.softmax_xent(f.logits, target));
      }
      int batch_loss = t.scale(t.sum_all(t.vcat(losses)), 1.0 / static_cast<double>(losses.size()));
      const double lv = t.scalar(batch_loss);
      if (!std::isfinite(lv)) throw NumericError("training loss became non-finite");
      epoch_loss += lv * static_cast<double>(losses.size());
      seen += losses.size();
      t.backward(batch_loss);
      adam.step(state.params, collect_grads(t, p, state.params));
    }

    EpochStats train_row = evaluate_classifier(state, corpus, split.train, word_vectors);
    train_row.epoch = epoch;
    train_row.split = "train";
    // The loss column is the running mean the optimizer saw; the metric
    // columns are measured after the epoch's updates.
    train_row.loss = epoch_loss / static_cast<double>(seen);
    result.history.push_back(train_row);
    if (!split.val.empty()) {
      EpochStats val_row = evaluate_classifier(state, corpus, split.val, word_vectors);
      val_row.epoch = epoch;
      val_row.split = "val";
      result.history.push_back(val_row);
    }
  }
  return result;
}

std::vector<AggregatedPhrase> recommend_for_brand(const ModelState& state, const Corpus& corpus,
                                                  const std::string& brand_or_category, int k) {
  std::vector<const AdInstance*> members;
  for (const auto& inst : corpus.instances())
    if (inst.brand == brand_or_category) members.push_back(&inst);
  if (members.empty())
    for (const auto& inst : corpus.instances())
      if (inst.category == brand_or_category) members.push_back(&inst);
  if (members.empty()) throw DataError("no instances for brand or category '" + brand_or_category + "'");

  Eigen::RowVectorXd total = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(state.phrases.size()));
  for (const AdInstance* inst : members) total += predict_probs(state, *inst);

  if (k < 1 || k > static_cast<int>(state.phrases.size()))
    throw ConfigError("top-k must lie in [1, vocab size]");
  std::vector<int> idx(state.phrases.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return total(a) > total(b); });
  std::vector<AggregatedPhrase> out;
  for (int i = 0; i < k; ++i)
    out.push_back({state.phrases.phrase(idx[static_cast<std::size_t>(i)]),
                   total(idx[static_cast<std::size_t>(i)])});
  return out;
}

}  // namespace adtheme
