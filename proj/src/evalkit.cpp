#include "adtheme/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "adtheme/classifier.hpp"
#include "adtheme/errors.hpp"
#include "adtheme/graph.hpp"
#include "adtheme/ranker.hpp"
#include "adtheme/rng.hpp"

namespace adtheme {

using nlohmann::json;

WordVectorTable WordVectorTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open word vector file '" + path + "'");
  WordVectorTable table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    std::vector<double> vals;
    double v;
    while (ss >> v) vals.push_back(v);
    if (vals.empty())
      throw DataError(path + ":" + std::to_string(lineno) + ": no vector components");
    Eigen::VectorXd vec(static_cast<Eigen::Index>(vals.size()));
    for (std::size_t i = 0; i < vals.size(); ++i) vec(static_cast<Eigen::Index>(i)) = vals[i];
    table.insert(word, std::move(vec));
  }
  return table;
}

void WordVectorTable::insert(const std::string& word, Eigen::VectorXd vec) {
  if (dim_ == 0) dim_ = static_cast<int>(vec.size());
  if (static_cast<int>(vec.size()) != dim_)
    throw DataError("word vector for '" + word + "' has dimension " +
                    std::to_string(vec.size()) + ", expected " + std::to_string(dim_));
  vecs_[word] = std::move(vec);
}

const Eigen::VectorXd* WordVectorTable::find(const std::string& word) const {
  auto it = vecs_.find(word);
  return it == vecs_.end() ? nullptr : &it->second;
}

Eigen::VectorXd WordVectorTable::phrase_vector(const std::vector<std::string>& words) const {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim_ == 0 ? 1 : dim_);
  double count = 0;
  for (const auto& w : words) {
    if (const Eigen::VectorXd* v = find(w)) {
      sum += *v;
      count += 1;
    }
  }
  if (count > 0) sum /= count;
  return sum;
}

double accuracy(const std::string& pred, const std::vector<ScoredKeyphrase>& labels) {
  for (const auto& l : labels)
    if (l.text() == pred) return l.score;
  return 0;
}

double similarity(const std::string& pred, const std::vector<ScoredKeyphrase>& labels,
                  const WordVectorTable& vectors) {
  Eigen::VectorXd pv = vectors.phrase_vector(split_phrase(pred));
  double best = 0;
  for (const auto& l : labels) {
    Eigen::VectorXd lv = vectors.phrase_vector(l.phrase);
    best = std::max(best, graph::cosine(pv, lv) * l.score);
  }
  return best;
}

std::vector<std::string> label_top3(const std::vector<ScoredKeyphrase>& labels) {
  std::vector<std::size_t> idx(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return labels[a].score > labels[b].score; });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < idx.size() && i < 3; ++i) out.push_back(labels[idx[i]].text());
  return out;
}

double recall_vqa3(const std::vector<std::string>& pred_top3,
                   const std::vector<std::string>& label_top3) {
  std::set<std::string> preds(pred_top3.begin(), pred_top3.end());
  if (preds.size() > 3) throw ShapeError("recall_vqa3 takes at most 3 predictions");
  std::set<std::string> truth(label_top3.begin(), label_top3.end());
  std::size_t common = 0;
  for (const auto& p : preds) common += truth.count(p);
  return static_cast<double>(common) / 3.0;
}

std::map<int, RankScores> ranking_metrics(const std::vector<std::string>& ranked,
                                          const std::vector<ScoredKeyphrase>& relevant,
                                          const std::vector<int>& ks) {
  {
    std::set<std::string> seen;
    for (const auto& p : ranked)
      if (!seen.insert(p).second) throw DataError("ranked list contains duplicate '" + p + "'");
  }
  std::map<int, RankScores> out;
  if (relevant.empty()) {
    std::cerr << "warning: ranking_metrics with empty relevant set\n";
    for (int k : ks) out[k] = {};
    return out;
  }
  std::map<std::string, double> rel;
  for (const auto& l : relevant) rel[l.text()] = l.score;
  std::vector<double> ideal;
  for (const auto& l : relevant) ideal.push_back(l.score);
  std::sort(ideal.begin(), ideal.end(), std::greater<double>());

  for (int k : ks) {
    if (k < 1) throw ConfigError("ranking cutoff must be >= 1");
    RankScores s;
    double hits = 0, dcg = 0, idcg = 0;
    for (int i = 0; i < k && i < static_cast<int>(ranked.size()); ++i) {
      auto it = rel.find(ranked[static_cast<std::size_t>(i)]);
      if (it == rel.end()) continue;
      hits += 1;
      dcg += it->second / std::log2(static_cast<double>(i) + 2.0);
    }
    for (int i = 0; i < k && i < static_cast<int>(ideal.size()); ++i)
      idcg += ideal[static_cast<std::size_t>(i)] / std::log2(static_cast<double>(i) + 2.0);
    s.p = hits / static_cast<double>(k);
    s.r = hits / static_cast<double>(relevant.size());
    s.ndcg = idcg > 0 ? dcg / idcg : 0;
    out[k] = s;
  }
  return out;
}

const std::map<std::string, double>* full_scale_reference(AblationMode mode, FeatureSet fs) {
  using Ref = std::map<FeatureSet, std::map<std::string, double>>;
  static const Ref classification = {
      {FeatureSet::I, {{"accuracy_pct", 10.05}, {"similarity_pct", 58.05}, {"r_vqa3", 0.447}}},
      {FeatureSet::IxQ, {{"accuracy_pct", 12.18}, {"similarity_pct", 58.26}, {"r_vqa3", 0.450}}},
      {FeatureSet::IxQW, {{"accuracy_pct", 19.01}, {"similarity_pct", 60.12}, {"r_vqa3", 0.467}}},
      {FeatureSet::IxQO, {{"accuracy_pct", 19.50}, {"similarity_pct", 60.34}, {"r_vqa3", 0.470}}},
      {FeatureSet::IxQWO,
       {{"accuracy_pct", 20.40}, {"similarity_pct", 60.95}, {"r_vqa3", 0.473}}},
      {FeatureSet::QWO, {{"accuracy_pct", 13.39}, {"similarity_pct", 60.13}, {"r_vqa3", 0.450}}},
      {FeatureSet::NonCrossModal,
       {{"accuracy_pct", 18.65}, {"similarity_pct", 60.68}, {"r_vqa3", 0.460}}},
  };
  static const Ref ranking = {
      {FeatureSet::I,
       {{"p@5", 0.150}, {"p@10", 0.126}, {"r@5", 0.161}, {"r@10", 0.248}, {"ndcg@5", 0.158},
        {"ndcg@10", 0.217}}},
      {FeatureSet::IxQ,
       {{"p@5", 0.152}, {"p@10", 0.124}, {"r@5", 0.158}, {"r@10", 0.259}, {"ndcg@5", 0.162},
        {"ndcg@10", 0.227}}},
      {FeatureSet::IxQW,
       {{"p@5", 0.154}, {"p@10", 0.130}, {"r@5", 0.160}, {"r@10", 0.271}, {"ndcg@5", 0.161},
        {"ndcg@10", 0.234}}},
      {FeatureSet::IxQO,
       {{"p@5", 0.174}, {"p@10", 0.137}, {"r@5", 0.182}, {"r@10", 0.287}, {"ndcg@5", 0.185},
        {"ndcg@10", 0.254}}},
      {FeatureSet::IxQWO,
       {{"p@5", 0.183}, {"p@10", 0.141}, {"r@5", 0.191}, {"r@10", 0.294}, {"ndcg@5", 0.198},
        {"ndcg@10", 0.265}}},
  };
  const Ref& table = mode == AblationMode::Classification ? classification : ranking;
  auto it = table.find(fs);
  return it == table.end() ? nullptr : &it->second;
}

namespace {

std::map<std::string, double> classification_metrics_for(const ModelState& state,
                                                         const Corpus& corpus,
                                                         const std::vector<std::string>& ids,
                                                         const WordVectorTable* vectors) {
  EpochStats s = evaluate_classifier(state, corpus, ids, vectors);
  return {{"loss", s.loss},
          {"accuracy", s.accuracy},
          {"similarity", s.similarity},
          {"r_vqa3", s.r_vqa3}};
}

std::map<std::string, double> ranking_metrics_for(const RankerState& ranker,
                                                  const ModelState& model, const Corpus& corpus,
                                                  const std::vector<std::string>& ids,
                                                  const KeyphraseVocab& vocab) {
  std::map<int, RankScores> total;
  for (const auto& id : ids) {
    const AdInstance& inst = corpus.by_id(id);
    QueryRepr q = query_repr(model, inst, ranker.config);
    auto ranked = rank_phrases(q, vocab.phrases(), ranker);
    std::vector<std::string> order;
    for (const auto& r : ranked) order.push_back(r.phrase);
    for (const auto& [k, s] : ranking_metrics(order, inst.labels, {5, 10})) {
      total[k].p += s.p;
      total[k].r += s.r;
      total[k].ndcg += s.ndcg;
    }
  }
  const double n = static_cast<double>(ids.size());
  std::map<std::string, double> out;
  for (auto& [k, s] : total) {
    out["p@" + std::to_string(k)] = s.p / n;
    out["r@" + std::to_string(k)] = s.r / n;
    out["ndcg@" + std::to_string(k)] = s.ndcg / n;
  }
  return out;
}

void accumulate(std::map<std::string, double>& into, const std::map<std::string, double>& from) {
  for (const auto& [k, v] : from) into[k] += v;
}

}  // namespace

EvalReport run_ablation(const Corpus& corpus, const CorpusSplit& split, const ModelConfig& mcfg,
                        const TrainConfig& tcfg, const RankerConfig& rcfg,
                        const AblationConfig& acfg) {
  if (acfg.seeds.empty()) throw ConfigError("run_ablation needs at least one seed");
  if (acfg.feature_sets.empty()) throw ConfigError("run_ablation needs at least one feature set");

  EvalReport report;
  report.mode = acfg.mode == AblationMode::Classification ? "classification" : "ranking";
  report.seeds = acfg.seeds;
  report.config_hash =
      std::to_string(fnv1a64(mcfg.to_json().dump() + tcfg.to_json().dump() + rcfg.to_json().dump()));

  bool category_done = false;
  for (FeatureSet fs : acfg.feature_sets) {
    AblationRow row;
    row.feature_set = to_string(fs);
    if (const auto* ref = full_scale_reference(acfg.mode, fs)) row.reference = *ref;
    try {
      std::map<std::string, double> sum;
      for (std::uint64_t seed : acfg.seeds) {
        ModelConfig m = mcfg;
        m.features = fs;
        TrainConfig t = tcfg;
        t.seed = seed;
        TrainResult trained = train_classifier(corpus, split, m, t, acfg.word_vectors);
        std::map<std::string, double> metrics;
        if (acfg.mode == AblationMode::Classification) {
          metrics = classification_metrics_for(trained.state, corpus, split.test,
                                               acfg.word_vectors);
        } else {
          RankerResult rr = train_ranker(corpus, split, trained.state, rcfg, seed);
          metrics = ranking_metrics_for(rr.state, trained.state, corpus, split.test,
                                        build_vocab(corpus));
        }
        accumulate(sum, metrics);
        if (!category_done && seed == acfg.seeds.front() &&
            acfg.mode == AblationMode::Classification) {
          std::map<std::string, std::vector<std::string>> by_cat;
          for (const auto& id : split.test) by_cat[corpus.by_id(id).category].push_back(id);
          for (const auto& [cat, ids] : by_cat)
            report.per_category[cat] =
                classification_metrics_for(trained.state, corpus, ids, acfg.word_vectors);
          category_done = true;
        }
      }
      for (auto& [k, v] : sum) row.metrics[k] = v / static_cast<double>(acfg.seeds.size());
      row.ok = true;
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
      std::cerr << "ablation row " << row.feature_set << " failed: " << e.what() << "\n";
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

json EvalReport::to_json() const {
  json j;
  j["mode"] = mode;
  j["seeds"] = seeds;
  j["config_hash"] = config_hash;
  json rows_json = json::array();
  for (const auto& row : rows) {
    json r;
    r["feature_set"] = row.feature_set;
    r["ok"] = row.ok;
    if (!row.ok) r["error"] = row.error;
    r["metrics"] = row.metrics;
    if (!row.reference.empty()) r["full_scale_reference"] = row.reference;
    rows_json.push_back(std::move(r));
  }
  j["rows"] = rows_json;
  if (!per_category.empty()) j["per_category"] = per_category;
  return j;
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(4);
  os << v;
  return os.str();
}

}  // namespace

std::string EvalReport::to_table() const {
  // Stable column order: union of metric names, sorted.
  std::set<std::string> cols;
  for (const auto& row : rows)
    for (const auto& [k, _] : row.metrics) cols.insert(k);

  std::vector<std::size_t> widths;
  std::vector<std::string> headers = {"features"};
  headers.insert(headers.end(), cols.begin(), cols.end());
  widths.resize(headers.size());
  for (std::size_t c = 0; c < headers.size(); ++c) widths[c] = headers[c].size();
  std::vector<std::vector<std::string>> body;
  for (const auto& row : rows) {
    std::vector<std::string> line = {row.feature_set};
    if (row.ok) {
      for (const auto& c : cols) {
        auto it = row.metrics.find(c);
        line.push_back(it == row.metrics.end() ? "-" : fmt(it->second));
      }
    } else {
      for (std::size_t c = 0; c < cols.size(); ++c) line.push_back(c == 0 ? "error" : "-");
    }
    for (std::size_t c = 0; c < line.size(); ++c) widths[c] = std::max(widths[c], line[c].size());
    body.push_back(std::move(line));
  }

  std::ostringstream os;
  os << mode << " ablation\n";
  auto emit = [&](const std::vector<std::string>& line) {
    for (std::size_t c = 0; c < line.size(); ++c) {
      os << line[c];
      if (c + 1 < line.size())
        for (std::size_t i = line[c].size(); i < widths[c] + 2; ++i) os << ' ';
    }
    os << "\n";
  };
  emit(headers);
  for (const auto& line : body) emit(line);

  bool any_ref = false;
  for (const auto& row : rows) any_ref = any_ref || !row.reference.empty();
  if (any_ref) {
    os << "\nfull-scale reference results (orientation only, not desk-scale targets)\n";
    for (const auto& row : rows) {
      if (row.reference.empty()) continue;
      os << "  " << row.feature_set << ":";
      for (const auto& [k, v] : row.reference) os << ' ' << k << '=' << fmt(v);
      os << "\n";
    }
  }
  if (!per_category.empty()) {
    os << "\nper-category metrics (first feature set, first seed)\n";
    for (const auto& [cat, metrics] : per_category) {
      os << "  " << cat << ":";
      for (const auto& [k, v] : metrics) os << ' ' << k << '=' << fmt(v);
      os << "\n";
    }
  }
  return os.str();
}

json category_lift(const EvalReport& base, const EvalReport& full) {
  std::set<std::string> base_cats, full_cats;
  for (const auto& [c, _] : base.per_category) base_cats.insert(c);
  for (const auto& [c, _] : full.per_category) full_cats.insert(c);
  if (base_cats != full_cats)
    throw DataError("category_lift needs identical category sets in both reports");

  json out = json::object();
  for (const auto& [cat, base_metrics] : base.per_category) {
    const auto& full_metrics = full.per_category.at(cat);
    json lifts = json::object();
    for (const auto& [metric, base_v] : base_metrics) {
      auto it = full_metrics.find(metric);
      if (it == full_metrics.end()) continue;
      if (base_v == 0)
        lifts[metric] = nullptr;
      else
        lifts[metric] = (it->second - base_v) / base_v;
    }
    out[cat] = std::move(lifts);
  }
  return out;
}

}  // namespace adtheme
