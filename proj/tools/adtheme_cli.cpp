// Command-line surface for the keyphrase recommendation pipeline: label
// extraction, corpus stats, training, evaluation, ranking, brand
// recommendation and the feature ablation harness.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <json.hpp>

#include "adtheme/checkpoint.hpp"
#include "adtheme/classifier.hpp"
#include "adtheme/corpus.hpp"
#include "adtheme/errors.hpp"
#include "adtheme/evalkit.hpp"
#include "adtheme/positionrank.hpp"
#include "adtheme/ranker.hpp"
#include "adtheme/rng.hpp"
#include "adtheme/runconfig.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace adtheme;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string default_corpus(const std::string& given) {
  if (!given.empty()) return given;
  if (const char* dir = std::getenv("ADTHEME_DATA_DIR"))
    return (fs::path(dir) / "corpus.jsonl").string();
  throw ConfigError("no --corpus given and ADTHEME_DATA_DIR is not set");
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << content;
}

json versions() {
  return {{"adtheme", kVersion},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                        std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)}};
}

void write_manifest(const fs::path& out_dir, const std::string& command, const RunConfig& cfg,
                    const json& extras) {
  json m;
  m["command"] = command;
  m["config"] = cfg.to_json();
  m["config_hash"] = cfg.hash();
  m["seed"] = cfg.seed;
  m["versions"] = versions();
  for (const auto& [k, v] : extras.items()) m[k] = v;
  write_file(out_dir / "manifest.json", m.dump(2) + "\n");
}

fs::path ensure_out(const std::string& out) {
  fs::path dir = out.empty() ? fs::path(".") : fs::path(out);
  fs::create_directories(dir);
  return dir;
}

struct CommonOpts {
  std::string corpus;
  std::string config_path;
  std::string out = "out";
  bool toy = false;
  std::uint64_t seed = 7;
  bool seed_given = false;
};

RunConfig resolve_config(const CommonOpts& o) {
  RunConfig cfg = o.config_path.empty() ? RunConfig{} : RunConfig::load(o.config_path);
  if (o.toy) cfg.apply_toy();
  if (o.seed_given) {
    cfg.seed = o.seed;
    cfg.train.seed = o.seed;
  }
  return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& o, bool needs_corpus = true) {
  if (needs_corpus)
    cmd->add_option("--corpus", o.corpus, "corpus JSONL path (default $ADTHEME_DATA_DIR/corpus.jsonl)");
  cmd->add_option("--config", o.config_path, "run config JSON file");
  cmd->add_option("--out", o.out, "output directory")->capture_default_str();
  cmd->add_flag("--toy", o.toy, "use the small desk-scale encoder preset");
  cmd->add_option("--seed", o.seed, "master seed")->each([&o](const std::string&) {
    o.seed_given = true;
  });
}

std::vector<FeatureSet> parse_feature_list(const std::string& csv) {
  std::vector<FeatureSet> out;
  std::string cur;
  std::istringstream ss(csv);
  while (std::getline(ss, cur, ',')) {
    if (!cur.empty()) out.push_back(feature_set_from_string(cur));
  }
  if (out.empty()) throw ConfigError("empty feature set list");
  return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& csv) {
  std::vector<std::uint64_t> out;
  std::string cur;
  std::istringstream ss(csv);
  while (std::getline(ss, cur, ',')) {
    if (!cur.empty()) out.push_back(std::stoull(cur));
  }
  if (out.empty()) throw ConfigError("empty seed list");
  return out;
}

// ---- subcommands ----

int run_extract_labels(const std::vector<std::string>& texts, const std::string& answers_file,
                       int max_k) {
  std::vector<std::string> answers = texts;
  if (!answers_file.empty()) {
    std::ifstream in(answers_file);
    if (!in) throw DataError("cannot open answers file '" + answers_file + "'");
    std::string line;
    while (std::getline(in, line))
      if (!line.empty()) answers.push_back(line);
  }
  if (answers.empty()) throw ConfigError("extract-labels needs --text or --answers-file");
  for (const auto& kp : extract_keyphrases(answers, max_k))
    std::cout << kp.text() << "\t" << kp.score << "\n";
  return 0;
}

int run_stats(const CommonOpts& o) {
  Corpus corpus = load_corpus(default_corpus(o.corpus));
  StatsReport report = corpus_stats(corpus);
  std::cout << report.to_table();
  if (!o.out.empty()) {
    fs::path dir = ensure_out(o.out);
    write_file(dir / "stats.json", report.to_json() + "\n");
  }
  return 0;
}

int run_train(const CommonOpts& o, const std::string& features, const std::string& mode,
              const std::string& word_vec_path) {
  RunConfig cfg = resolve_config(o);
  if (!features.empty()) cfg.model.features = feature_set_from_string(features);
  Corpus corpus = load_corpus(default_corpus(o.corpus));
  CorpusSplit split = split_corpus(corpus, cfg.seed);
  fs::path dir = ensure_out(o.out);

  std::optional<WordVectorTable> vectors;
  if (!word_vec_path.empty()) vectors = WordVectorTable::load(word_vec_path);

  write_manifest(dir, "train", cfg,
                 {{"corpus", default_corpus(o.corpus)},
                  {"features", to_string(cfg.model.features)},
                  {"mode", mode}});

  TrainResult trained = train_classifier(corpus, split, cfg.model, cfg.train,
                                         vectors ? &*vectors : nullptr);
  save_model(trained.state, (dir / "model.ckpt").string(), {{"split_seed", cfg.seed}});
  write_file(dir / "history.csv", history_csv(trained.history));

  if (mode == "ranking") {
    RankerResult rr = train_ranker(corpus, split, trained.state, cfg.ranker, cfg.seed);
    save_ranker(rr.state, (dir / "ranker.ckpt").string());
    write_file(dir / "ranker_history.csv", ranker_history_csv(rr.history));
  } else if (mode != "classification") {
    throw ConfigError("--mode must be classification or ranking");
  }
  if (!trained.history.empty()) {
    const EpochStats& last = trained.history.back();
    std::cout << "final " << last.split << " loss " << last.loss << ", accuracy "
              << last.accuracy << "\n";
  }
  return 0;
}

int run_evaluate(const CommonOpts& o, const std::string& checkpoint,
                 const std::string& word_vec_path) {
  ModelState state = load_model(checkpoint);
  json meta = load_checkpoint(checkpoint).meta;
  Corpus corpus = load_corpus(default_corpus(o.corpus));
  std::uint64_t seed = o.seed_given ? o.seed : meta.value("split_seed", std::uint64_t{7});
  CorpusSplit split = split_corpus(corpus, seed);

  std::optional<WordVectorTable> vectors;
  if (!word_vec_path.empty()) vectors = WordVectorTable::load(word_vec_path);

  EpochStats s = evaluate_classifier(state, corpus, split.test, vectors ? &*vectors : nullptr);
  json report = {{"split", "test"},
                 {"split_seed", seed},
                 {"instances", split.test.size()},
                 {"metrics",
                  {{"loss", s.loss},
                   {"accuracy", s.accuracy},
                   {"similarity", s.similarity},
                   {"r_vqa3", s.r_vqa3}}}};
  fs::path dir = ensure_out(o.out);
  write_file(dir / "report.json", report.dump(2) + "\n");
  std::ostringstream table;
  table << "test metrics (" << split.test.size() << " instances)\n"
        << "  loss        " << s.loss << "\n"
        << "  accuracy    " << s.accuracy << "\n"
        << "  similarity  " << s.similarity << "\n"
        << "  r_vqa3      " << s.r_vqa3 << "\n";
  write_file(dir / "report.txt", table.str());
  std::cout << table.str();
  return 0;
}

int run_rank(const CommonOpts& o, const std::string& checkpoint, const std::string& ranker_path,
             const std::string& only_id, int topk) {
  ModelState model = load_model(checkpoint);
  RankerState ranker = load_ranker(ranker_path);
  Corpus corpus = load_corpus(default_corpus(o.corpus));
  KeyphraseVocab vocab = build_vocab(corpus);

  std::vector<std::string> ids;
  if (!only_id.empty()) {
    ids.push_back(only_id);
  } else {
    std::uint64_t seed = o.seed_given
                             ? o.seed
                             : load_checkpoint(checkpoint).meta.value("split_seed",
                                                                      std::uint64_t{7});
    ids = split_corpus(corpus, seed).test;
  }

  std::ostringstream tsv;
  tsv.precision(17);
  for (const auto& id : ids) {
    const AdInstance& inst = corpus.by_id(id);
    QueryRepr q = query_repr(model, inst, ranker.config);
    auto ranked = rank_phrases(q, vocab.phrases(), ranker);
    const int n = topk > 0 ? std::min<int>(topk, static_cast<int>(ranked.size()))
                           : static_cast<int>(ranked.size());
    for (int r = 0; r < n; ++r)
      tsv << id << "\t" << (r + 1) << "\t" << ranked[static_cast<std::size_t>(r)].phrase << "\t"
          << ranked[static_cast<std::size_t>(r)].score << "\n";
  }
  fs::path dir = ensure_out(o.out);
  write_file(dir / "rankings.tsv", tsv.str());
  std::cout << tsv.str();
  return 0;
}

int run_recommend(const CommonOpts& o, const std::string& checkpoint, const std::string& brand,
                  int topk) {
  ModelState state = load_model(checkpoint);
  Corpus corpus = load_corpus(default_corpus(o.corpus));
  auto recs = recommend_for_brand(state, corpus, brand, topk);
  std::ostringstream tsv;
  tsv.precision(17);
  for (std::size_t i = 0; i < recs.size(); ++i)
    tsv << (i + 1) << "\t" << recs[i].phrase << "\t" << recs[i].score << "\n";
  std::cout << tsv.str();
  if (!o.out.empty()) {
    fs::path dir = ensure_out(o.out);
    write_file(dir / "recommendations.tsv", tsv.str());
  }
  return 0;
}

int run_ablate(const CommonOpts& o, const std::string& features, const std::string& mode,
               const std::string& seeds_csv, const std::string& word_vec_path) {
  RunConfig cfg = resolve_config(o);
  Corpus corpus = load_corpus(default_corpus(o.corpus));
  CorpusSplit split = split_corpus(corpus, cfg.seed);

  AblationConfig acfg;
  acfg.mode = mode == "ranking" ? AblationMode::Ranking : AblationMode::Classification;
  if (mode != "ranking" && mode != "classification")
    throw ConfigError("--mode must be classification or ranking");
  acfg.feature_sets = features.empty()
                          ? (acfg.mode == AblationMode::Ranking ? ranking_feature_sets()
                                                                : all_feature_sets())
                          : parse_feature_list(features);
  acfg.seeds = seeds_csv.empty() ? std::vector<std::uint64_t>{cfg.seed}
                                 : parse_seed_list(seeds_csv);

  std::optional<WordVectorTable> vectors;
  if (!word_vec_path.empty()) vectors = WordVectorTable::load(word_vec_path);
  acfg.word_vectors = vectors ? &*vectors : nullptr;

  fs::path dir = ensure_out(o.out);
  json extras = {{"corpus", default_corpus(o.corpus)}, {"mode", mode}, {"seeds", acfg.seeds}};
  write_manifest(dir, "ablate", cfg, extras);

  EvalReport report = run_ablation(corpus, split, cfg.model, cfg.train, cfg.ranker, acfg);
  write_file(dir / "report.json", report.to_json().dump(2) + "\n");
  write_file(dir / "report.txt", report.to_table());
  std::cout << report.to_table();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ad keyphrase recommendation pipeline"};
  app.require_subcommand(1);

  // extract-labels
  auto* extract = app.add_subcommand("extract-labels", "extract scored keyphrases from answers");
  std::vector<std::string> texts;
  std::string answers_file;
  int max_k = 5;
  extract->add_option("--text", texts, "answer text (repeatable)");
  extract->add_option("--answers-file", answers_file, "file with one answer per line");
  extract->add_option("--max-k", max_k, "maximum phrases")->capture_default_str();

  // stats
  auto* stats = app.add_subcommand("stats", "corpus statistics");
  CommonOpts stats_o;
  stats_o.out = "";
  add_common(stats, stats_o);

  // train
  auto* train = app.add_subcommand("train", "train the classifier (and optionally the ranker)");
  CommonOpts train_o;
  std::string train_features, train_mode = "classification", train_wv;
  add_common(train, train_o);
  train->add_option("--features", train_features, "feature set (I, IxQ, IxQW, IxQO, IxQWO, QWO, NonCrossModal)");
  train->add_option("--mode", train_mode, "classification or ranking")->capture_default_str();
  train->add_option("--word-vectors", train_wv, "word vector file for the similarity metric");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "evaluate a checkpoint on the test split");
  CommonOpts eval_o;
  std::string eval_ckpt, eval_wv;
  add_common(evaluate, eval_o);
  evaluate->add_option("--checkpoint", eval_ckpt, "classifier checkpoint")->required();
  evaluate->add_option("--word-vectors", eval_wv, "word vector file for the similarity metric");

  // rank
  auto* rank = app.add_subcommand("rank", "rank the vocabulary for test queries");
  CommonOpts rank_o;
  std::string rank_ckpt, rank_ranker, rank_id;
  int rank_topk = 0;
  add_common(rank, rank_o);
  rank->add_option("--checkpoint", rank_ckpt, "classifier checkpoint")->required();
  rank->add_option("--ranker", rank_ranker, "ranker checkpoint")->required();
  rank->add_option("--id", rank_id, "rank for a single instance id");
  rank->add_option("--topk", rank_topk, "emit only the top K rows per query");

  // recommend
  auto* recommend = app.add_subcommand("recommend", "aggregate predictions for a brand");
  CommonOpts rec_o;
  rec_o.out = "";
  std::string rec_ckpt, rec_brand;
  int rec_topk = 5;
  add_common(recommend, rec_o);
  recommend->add_option("--checkpoint", rec_ckpt, "classifier checkpoint")->required();
  recommend->add_option("--brand", rec_brand, "brand (or category) name")->required();
  recommend->add_option("--topk", rec_topk, "phrases to emit")->capture_default_str();

  // ablate
  auto* ablate = app.add_subcommand("ablate", "train and evaluate across feature sets");
  CommonOpts abl_o;
  std::string abl_features, abl_mode = "classification", abl_seeds, abl_wv;
  add_common(ablate, abl_o);
  ablate->add_option("--features", abl_features, "comma-separated feature sets");
  ablate->add_option("--mode", abl_mode, "classification or ranking")->capture_default_str();
  ablate->add_option("--seeds", abl_seeds, "comma-separated seeds");
  ablate->add_option("--word-vectors", abl_wv, "word vector file for the similarity metric");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (extract->parsed()) return run_extract_labels(texts, answers_file, max_k);
    if (stats->parsed()) return run_stats(stats_o);
    if (train->parsed()) return run_train(train_o, train_features, train_mode, train_wv);
    if (evaluate->parsed()) return run_evaluate(eval_o, eval_ckpt, eval_wv);
    if (rank->parsed()) return run_rank(rank_o, rank_ckpt, rank_ranker, rank_id, rank_topk);
    if (recommend->parsed()) return run_recommend(rec_o, rec_ckpt, rec_brand, rec_topk);
    if (ablate->parsed()) return run_ablate(abl_o, abl_features, abl_mode, abl_seeds, abl_wv);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
