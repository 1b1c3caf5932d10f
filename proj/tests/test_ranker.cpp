#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "adtheme/errors.hpp"
#include "adtheme/ranker.hpp"
#include "adtheme/rng.hpp"
#include "adtheme/vispipe.hpp"

using namespace adtheme;

namespace {

KeyphraseVocab demo_vocab() {
  return KeyphraseVocab::from_phrases(
      {"summer sale", "winter deal", "big offer", "fresh start", "last chance", "new brand"});
}

QueryRepr demo_query(int terms, int dim, std::uint64_t seed = 3) {
  Rng rng(seed);
  QueryRepr q;
  q.terms.resize(terms, dim);
  for (Eigen::Index i = 0; i < q.terms.rows(); ++i)
    for (Eigen::Index j = 0; j < q.terms.cols(); ++j) q.terms(i, j) = rng.normal();
  q.mask.assign(static_cast<std::size_t>(terms), 1);
  q.gate_mask = q.mask;
  return q;
}

ModelState toy_model(const Corpus& corpus) {
  ModelConfig cfg;
  cfg.encoder = EncoderConfig::toy();
  cfg.token_vocab_size = 128;
  cfg.max_len = 32;
  cfg.d_x = 6;
  std::vector<std::string> texts;
  for (const auto& inst : corpus.instances()) texts.push_back(compose_text(inst, cfg.features));
  return init_model(cfg, TokenVocab::build(texts, 128), build_vocab(corpus), 7);
}

}  // namespace

TEST_CASE("ranker config json round trip and validation") {
  RankerConfig cfg;
  cfg.top_interactions = 7;
  cfg.use_count_histogram = true;
  cfg.gate_wiki_only = true;
  RankerConfig back = RankerConfig::from_json(cfg.to_json());
  CHECK(back.top_interactions == 7);
  CHECK(back.hidden == 10);
  CHECK(back.lr == 1.0);
  CHECK(back.rho == 0.95);
  CHECK(back.batch_size == 300);
  CHECK(back.epochs == 10);
  CHECK(back.use_count_histogram);
  CHECK(back.single_vector_query == false);
  CHECK(back.gate_wiki_only);

  RankerConfig bad;
  bad.top_interactions = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = RankerConfig{};
  bad.lr = -1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("init_ranker: unknown-word row plus sorted phrase words") {
  RankerState state = init_ranker(RankerConfig{}, demo_vocab(), 8, 11);
  REQUIRE(state.words.size() == 13);  // [UNK] + 12 distinct words
  CHECK(state.words[0] == "[UNK]");
  for (std::size_t i = 2; i < state.words.size(); ++i) CHECK(state.words[i - 1] < state.words[i]);
  CHECK(state.word_index("sale") > 0);
  CHECK(state.word_index("nonexistent") == 0);

  CHECK(state.params.at("rank.terms").rows() == 13);
  CHECK(state.params.at("rank.terms").cols() == 8);
  CHECK(state.params.at("rank.gate").rows() == 8);
  CHECK(state.params.at("rank.mlp.w1").rows() == 5);
  CHECK(state.params.at("rank.mlp.w1").cols() == 10);
  CHECK(state.params.at("rank.mlp.w2").cols() == 1);

  RankerState again = init_ranker(RankerConfig{}, demo_vocab(), 8, 11);
  CHECK(again.params.at("rank.terms") == state.params.at("rank.terms"));
  CHECK_THROWS_AS(init_ranker(RankerConfig{}, demo_vocab(), 0, 11), ConfigError);
}

TEST_CASE("interaction features: sorted cosines padded with -1") {
  Eigen::RowVectorXd term(2);
  term << 1.0, 0.0;
  Mat phrase(3, 2);
  phrase << 1.0, 0.0, 0.0, 1.0, -1.0, 0.0;
  Eigen::RowVectorXd z = interaction_features(term, phrase, 5);
  REQUIRE(z.cols() == 5);
  CHECK(z(0) == doctest::Approx(1.0));
  CHECK(z(1) == doctest::Approx(0.0));
  CHECK(z(2) == doctest::Approx(-1.0));
  CHECK(z(3) == -1.0);
  CHECK(z(4) == -1.0);

  Eigen::RowVectorXd z2 = interaction_features(term, phrase, 2);
  CHECK(z2(0) == doctest::Approx(1.0));
  CHECK(z2(1) == doctest::Approx(0.0));
  CHECK_THROWS_AS(interaction_features(term, Mat(0, 2), 3), ShapeError);
}

TEST_CASE("count histogram: log(1+count) per cosine bin") {
  Eigen::RowVectorXd term(2);
  term << 1.0, 0.0;
  Mat phrase(3, 2);
  phrase << 1.0, 0.0, 0.0, 1.0, -1.0, 0.0;  // cosines 1, 0, -1
  Eigen::RowVectorXd h = count_histogram(term, phrase, 4);
  REQUIRE(h.cols() == 4);
  CHECK(h(0) == doctest::Approx(std::log(2.0)));  // cosine -1
  CHECK(h(1) == 0.0);
  CHECK(h(2) == doctest::Approx(std::log(2.0)));  // cosine 0
  CHECK(h(3) == doctest::Approx(std::log(2.0)));  // cosine 1 clamps to top bin
}

TEST_CASE("plain score equals the tape score") {
  RankerConfig cfg;
  for (bool hist : {false, true}) {
    cfg.use_count_histogram = hist;
    RankerState state = init_ranker(cfg, demo_vocab(), 8, 21);
    QueryRepr q = demo_query(3, 8);
    std::vector<std::string> phrase = {"summer", "unknownword"};
    double plain = score(q, phrase, state);

    graph::Tape t;
    NodeMap p = register_params(t, state.params);
    int node = score_node(t, p, q, phrase, state);
    CHECK(t.scalar(node) == doctest::Approx(plain).epsilon(1e-12));
  }
}

TEST_CASE("gate weights sum to one: constant MLP output passes through") {
  RankerState state = init_ranker(RankerConfig{}, demo_vocab(), 8, 22);
  state.params.at("rank.mlp.w2").setZero();
  state.params.at("rank.mlp.b2")(0, 0) = 0.7;
  QueryRepr q = demo_query(4, 8);
  CHECK(score(q, {"summer", "sale"}, state) == doctest::Approx(0.7).epsilon(1e-12));

  // Restricting the gate to a subset must still yield the same constant.
  q.gate_mask = {0, 1, 0, 1};
  CHECK(score(q, {"summer", "sale"}, state) == doctest::Approx(0.7).epsilon(1e-12));
  CHECK_THROWS_AS(score(q, {}, state), ShapeError);
}

TEST_CASE("tape gradients agree with finite differences of the plain score") {
  RankerState state = init_ranker(RankerConfig{}, demo_vocab(), 6, 23);
  QueryRepr q = demo_query(3, 6, 9);
  std::vector<std::string> phrase = {"summer", "sale"};

  graph::Tape t;
  NodeMap p = register_params(t, state.params);
  t.backward(score_node(t, p, q, phrase, state));
  GradMap grads = collect_grads(t, p, state.params);

  const double eps = 1e-6;
  for (const auto& name : state.params.names()) {
    const Mat& w = state.params.at(name);
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) {
        RankerState plus = state, minus = state;
        plus.params.at(name)(i, j) += eps;
        minus.params.at(name)(i, j) -= eps;
        double numeric = (score(q, phrase, plus) - score(q, phrase, minus)) / (2.0 * eps);
        double analytic = grads.at(name)(i, j);
        INFO(name, "(", i, ",", j, ")");
        CHECK(std::abs(analytic - numeric) / std::max(1.0, std::abs(numeric)) < 1e-5);
      }
    }
  }
}

TEST_CASE("hinge loss: values and the margin boundary") {
  CHECK(hinge_loss(0.2, 0.6) == doctest::Approx(1.4).epsilon(1e-12));
  CHECK(hinge_loss(2.5, 0.6) == 0.0);
  CHECK(hinge_loss(1.6, 0.6) == 0.0);  // margin exactly 1
  CHECK(hinge_loss(0.5, -0.6) == 0.0);
  CHECK(hinge_loss(0.0, 0.0) == doctest::Approx(1.0));
  CHECK(hinge_loss(-0.5, 0.5) == doctest::Approx(2.0));
}

TEST_CASE("triple sampling: ladder pairs plus seeded vocabulary negatives") {
  AdInstance inst = synth_instance(77, 3, 6);
  inst.labels = {{{"summer", "sale"}, 1.0}, {{"winter", "deal"}, 0.9}, {{"big", "offer"}, 0.9}};
  KeyphraseVocab vocab = demo_vocab();

  auto triples = sample_triples(inst, vocab, 5, 2);
  // Ordered pairs: sale>deal, sale>offer (the two 0.9s do not pair), plus
  // two sampled negatives per label.
  REQUIRE(triples.size() == 2 + 3 * 2);
  int intra = 0;
  std::set<std::string> labeled = {"summer sale", "winter deal", "big offer"};
  for (const auto& tr : triples) {
    CHECK(tr.query_id == inst.id);
    if (labeled.count(tr.negative)) {
      ++intra;
      CHECK(tr.positive.score == 1.0);
    } else {
      CHECK(vocab.contains(tr.negative));
    }
  }
  CHECK(intra == 2);

  auto again = sample_triples(inst, vocab, 5, 2);
  REQUIRE(again.size() == triples.size());
  for (std::size_t i = 0; i < triples.size(); ++i) {
    CHECK(again[i].positive.text() == triples[i].positive.text());
    CHECK(again[i].negative == triples[i].negative);
  }

  auto none = sample_triples(inst, vocab, 5, 0);
  CHECK(none.size() == 2);

  AdInstance lone = inst;
  lone.labels = {{{"summer", "sale"}, 1.0}};
  KeyphraseVocab only = KeyphraseVocab::from_phrases({"summer sale"});
  CHECK(sample_triples(lone, only, 5, 3).empty());
  lone.labels.clear();
  CHECK_THROWS_AS(sample_triples(lone, vocab, 5, 2), DataError);
}

TEST_CASE("rank_phrases deduplicates and breaks score ties lexicographically") {
  RankerState state = init_ranker(RankerConfig{}, demo_vocab(), 8, 24);
  state.params.at("rank.mlp.w2").setZero();  // all scores identical
  state.params.at("rank.mlp.b2")(0, 0) = 0.25;
  QueryRepr q = demo_query(2, 8);
  auto ranked = rank_phrases(q, {"winter deal", "big offer", "winter deal", "apple pie"}, state);
  REQUIRE(ranked.size() == 3);
  CHECK(ranked[0].phrase == "apple pie");
  CHECK(ranked[1].phrase == "big offer");
  CHECK(ranked[2].phrase == "winter deal");
  for (const auto& r : ranked) CHECK(r.score == doctest::Approx(0.25));

  RankerState real = init_ranker(RankerConfig{}, demo_vocab(), 8, 25);
  auto scored = rank_phrases(q, demo_vocab().phrases(), real);
  for (std::size_t i = 1; i < scored.size(); ++i) CHECK(scored[i - 1].score >= scored[i].score);
  CHECK_THROWS_AS(rank_phrases(q, {}, state), DataError);
}

TEST_CASE("query representations follow the configuration") {
  Corpus corpus;
  for (int i = 0; i < 3; ++i) {
    AdInstance inst = synth_instance(static_cast<std::uint64_t>(300 + i), 3, 6, i % 2);
    inst.questions = {"what is on sale"};
    inst.ocr_text = "summer sale today";
    inst.wiki_text = "brand background prose";
    corpus.add(inst);
  }
  ModelState model = toy_model(corpus);
  const AdInstance& inst = corpus.instances().front();

  RankerConfig cfg;
  QueryRepr full = query_repr(model, inst, cfg);
  CHECK(full.terms.rows() > 1);
  CHECK(full.terms.cols() == 32);
  CHECK(full.gate_mask == full.mask);

  cfg.single_vector_query = true;
  QueryRepr single = query_repr(model, inst, cfg);
  CHECK(single.terms.rows() == 1);
  JointEmbedding j = embed_instance(model, inst);
  CHECK((single.terms.row(0) - j.e).cwiseAbs().maxCoeff() == 0.0);

  cfg.single_vector_query = false;
  cfg.gate_wiki_only = true;
  QueryRepr wiki = query_repr(model, inst, cfg);
  std::size_t gated = 0;
  for (auto b : wiki.gate_mask) gated += b;
  CHECK(gated > 0);
  CHECK(gated < wiki.gate_mask.size());
  CHECK(wiki.gate_mask.front() == 0);  // [CLS] is not a wiki token
  CHECK(wiki.gate_mask.back() == 0);   // trailing [SEP] neither

  // Without wiki text the gate falls back to every term.
  AdInstance bare = inst;
  bare.id = "bare";
  bare.wiki_text.clear();
  Corpus c2 = corpus;
  c2.add(bare);
  QueryRepr fallback = query_repr(model, bare, cfg);
  CHECK(fallback.gate_mask == fallback.mask);
}

TEST_CASE("ranker training: loss falls, zero lr freezes, seeds reproduce") {
  Corpus corpus;
  for (int i = 0; i < 6; ++i) {
    AdInstance inst = synth_instance(static_cast<std::uint64_t>(400 + i), 3, 6);
    std::string topic = i % 2 ? "summer" : "winter";
    inst.questions = {"all about " + topic};
    inst.labels = {{{topic, "sale"}, 1.0}, {{topic, "deal"}, 0.9}};
    corpus.add(inst);
  }
  CorpusSplit split;
  for (int i = 0; i < 4; ++i) split.train.push_back(corpus.instances()[static_cast<std::size_t>(i)].id);
  split.val = {corpus.instances()[4].id, corpus.instances()[5].id};
  ModelState model = toy_model(corpus);

  RankerConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 8;
  cfg.negatives_per_positive = 2;

  RankerResult r = train_ranker(corpus, split, model, cfg, 5);
  REQUIRE(r.history.size() == 3);
  CHECK(r.history.back().loss < r.history.front().loss);
  CHECK(r.history.back().val_ndcg5 >= 0.0);
  CHECK(r.history.back().val_ndcg5 <= 1.0);

  RankerResult same = train_ranker(corpus, split, model, cfg, 5);
  CHECK(ranker_history_csv(same.history) == ranker_history_csv(r.history));
  for (const auto& name : r.state.params.names())
    CHECK(same.state.params.at(name) == r.state.params.at(name));

  RankerConfig frozen = cfg;
  frozen.lr = 0.0;
  frozen.epochs = 1;
  RankerResult f = train_ranker(corpus, split, model, frozen, 5);
  RankerState init = init_ranker(frozen, build_vocab(corpus), 32, 5);
  for (const auto& name : init.params.names())
    CHECK(f.state.params.at(name) == init.params.at(name));

  CorpusSplit empty;
  CHECK_THROWS_AS(train_ranker(corpus, empty, model, cfg, 5), DataError);
}

TEST_CASE("ranker save/load reproduces scores") {
  RankerState state = init_ranker(RankerConfig{}, demo_vocab(), 8, 26);
  QueryRepr q = demo_query(3, 8);
  double before = score(q, {"summer", "sale"}, state);

  auto path = std::filesystem::temp_directory_path() / "adtheme_ranker_roundtrip.ckpt";
  save_ranker(state, path.string());
  RankerState back = load_ranker(path.string());
  std::filesystem::remove(path);
  CHECK(back.term_dim == 8);
  CHECK(back.words == state.words);
  CHECK(back.config.hidden == state.config.hidden);
  CHECK(score(q, {"summer", "sale"}, back) == before);
}
