#include "adtheme/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "adtheme/errors.hpp"
#include "adtheme/rng.hpp"

namespace adtheme {

using nlohmann::json;

bool is_ladder_score(double s) {
  for (double v : kScoreLadder)
    if (s == v) return true;
  return false;
}

std::string ScoredKeyphrase::text() const { return phrase_key(phrase); }

std::string phrase_key(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

std::vector<std::string> split_phrase(const std::string& text) {
  std::vector<std::string> words;
  std::istringstream ss(text);
  std::string w;
  while (ss >> w) words.push_back(w);
  return words;
}

void AdInstance::validate() const {
  auto fail = [this](const std::string& msg) {
    throw DataError("instance '" + id + "': " + msg);
  };
  if (id.empty()) throw DataError("instance with empty id");
  if (width <= 0 || height <= 0) fail("width and height must be positive");
  if (boxes.empty()) fail("needs at least one region");
  if (region_features.size() != boxes.size())
    fail("region_features and boxes must have equal length");
  const std::size_t dim = region_features.front().size();
  if (dim == 0) fail("region feature dimension must be >= 1");
  for (const auto& f : region_features)
    if (f.size() != dim) fail("inconsistent region feature dimensions");
  for (const auto& b : boxes) {
    if (!(0 <= b.x1 && b.x1 < b.x2 && b.x2 <= width))
      fail("box violates 0 <= x1 < x2 <= width");
    if (!(0 <= b.y1 && b.y1 < b.y2 && b.y2 <= height))
      fail("box violates 0 <= y1 < y2 <= height");
  }
  if (labels.empty() || labels.size() > 5) fail("needs 1..5 labels");
  std::set<std::string> seen;
  for (const auto& l : labels) {
    if (l.phrase.empty() || l.phrase.size() > 8) fail("label phrases have 1..8 words");
    for (const auto& w : l.phrase) {
      if (w.empty()) fail("label phrase contains an empty word");
      for (char c : w)
        if (c >= 'A' && c <= 'Z') fail("label phrases must be lowercase");
    }
    if (!is_ladder_score(l.score)) fail("label score must be one of 1.0/0.9/0.8/0.7/0.6");
    if (!seen.insert(l.text()).second) fail("duplicate label phrase '" + l.text() + "'");
  }
}

void Corpus::add(AdInstance inst) {
  inst.validate();
  if (index_.count(inst.id)) throw DataError("duplicate instance id '" + inst.id + "'");
  if (!instances_.empty()) {
    std::size_t dim = instances_.front().region_features.front().size();
    if (inst.region_features.front().size() != dim)
      throw DataError("instance '" + inst.id + "': region feature dim " +
                      std::to_string(inst.region_features.front().size()) +
                      " differs from corpus dim " + std::to_string(dim));
  }
  index_.emplace(inst.id, instances_.size());
  instances_.push_back(std::move(inst));
}

const AdInstance& Corpus::by_id(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw DataError("unknown instance id '" + id + "'");
  return instances_[it->second];
}

int Corpus::feature_dim() const {
  if (instances_.empty()) throw DataError("feature_dim() on empty corpus");
  return static_cast<int>(instances_.front().region_features.front().size());
}

const std::vector<FeatureSet>& all_feature_sets() {
  static const std::vector<FeatureSet> v = {
      FeatureSet::I,    FeatureSet::IxQ, FeatureSet::IxQW,         FeatureSet::IxQO,
      FeatureSet::IxQWO, FeatureSet::QWO, FeatureSet::NonCrossModal};
  return v;
}

const std::vector<FeatureSet>& ranking_feature_sets() {
  static const std::vector<FeatureSet> v = {FeatureSet::I, FeatureSet::IxQ, FeatureSet::IxQW,
                                            FeatureSet::IxQO, FeatureSet::IxQWO};
  return v;
}

std::string to_string(FeatureSet fs) {
  switch (fs) {
    case FeatureSet::I: return "I";
    case FeatureSet::IxQ: return "IxQ";
    case FeatureSet::IxQW: return "IxQW";
    case FeatureSet::IxQO: return "IxQO";
    case FeatureSet::IxQWO: return "IxQWO";
    case FeatureSet::QWO: return "QWO";
    case FeatureSet::NonCrossModal: return "NonCrossModal";
  }
  throw ConfigError("bad feature set value");
}

FeatureSet feature_set_from_string(const std::string& s) {
  for (FeatureSet fs : all_feature_sets())
    if (to_string(fs) == s) return fs;
  throw ConfigError("unknown feature set '" + s +
                    "' (expected I, IxQ, IxQW, IxQO, IxQWO, QWO or NonCrossModal)");
}

bool uses_image(FeatureSet fs) { return fs != FeatureSet::QWO; }
bool uses_questions(FeatureSet fs) { return fs != FeatureSet::I; }
bool uses_ocr(FeatureSet fs) {
  return fs == FeatureSet::IxQO || fs == FeatureSet::IxQWO || fs == FeatureSet::QWO ||
         fs == FeatureSet::NonCrossModal;
}
bool uses_wiki(FeatureSet fs) {
  return fs == FeatureSet::IxQW || fs == FeatureSet::IxQWO || fs == FeatureSet::QWO ||
         fs == FeatureSet::NonCrossModal;
}

KeyphraseVocab KeyphraseVocab::from_phrases(std::vector<std::string> phrases) {
  std::sort(phrases.begin(), phrases.end());
  phrases.erase(std::unique(phrases.begin(), phrases.end()), phrases.end());
  KeyphraseVocab v;
  v.phrases_ = std::move(phrases);
  for (std::size_t i = 0; i < v.phrases_.size(); ++i)
    v.index_.emplace(v.phrases_[i], static_cast<int>(i));
  return v;
}

const std::string& KeyphraseVocab::phrase(int idx) const {
  if (idx < 0 || idx >= static_cast<int>(phrases_.size()))
    throw ShapeError("keyphrase index out of range");
  return phrases_[static_cast<std::size_t>(idx)];
}

int KeyphraseVocab::index(const std::string& phrase) const {
  auto it = index_.find(phrase);
  return it == index_.end() ? -1 : it->second;
}

namespace {

std::string line_err(const std::string& path, std::size_t line, const std::string& msg) {
  return path + ":" + std::to_string(line) + ": " + msg;
}

AdInstance instance_from_json(const json& j) {
  AdInstance inst;
  inst.id = j.at("id").get<std::string>();
  inst.width = j.at("width").get<double>();
  inst.height = j.at("height").get<double>();
  for (const auto& b : j.at("boxes")) {
    if (!b.is_array() || b.size() != 4) throw DataError("each box must be [x1,y1,x2,y2]");
    inst.boxes.push_back({b[0].get<double>(), b[1].get<double>(), b[2].get<double>(),
                          b[3].get<double>()});
  }
  if (j.contains("region_features"))
    inst.region_features = j.at("region_features").get<std::vector<std::vector<double>>>();
  inst.ocr_text = j.value("ocr_text", "");
  if (j.contains("questions")) inst.questions = j.at("questions").get<std::vector<std::string>>();
  inst.wiki_text = j.value("wiki_text", "");
  inst.brand = j.value("brand", "");
  inst.category = j.value("category", "");
  for (const auto& l : j.at("labels")) {
    ScoredKeyphrase kp;
    kp.phrase = split_phrase(l.at("phrase").get<std::string>());
    kp.score = l.at("score").get<double>();
    inst.labels.push_back(std::move(kp));
  }
  return inst;
}

json instance_to_json(const AdInstance& inst) {
  json j;
  j["id"] = inst.id;
  j["width"] = inst.width;
  j["height"] = inst.height;
  json boxes = json::array();
  for (const auto& b : inst.boxes) boxes.push_back({b.x1, b.y1, b.x2, b.y2});
  j["boxes"] = boxes;
  j["region_features"] = inst.region_features;
  j["ocr_text"] = inst.ocr_text;
  j["questions"] = inst.questions;
  j["wiki_text"] = inst.wiki_text;
  j["brand"] = inst.brand;
  j["category"] = inst.category;
  json labels = json::array();
  for (const auto& l : inst.labels) labels.push_back({{"phrase", l.text()}, {"score", l.score}});
  j["labels"] = labels;
  return j;
}

struct SidecarIndex {
  std::string bin_path;
  struct Entry {
    std::size_t offset = 0;  // in floats
    std::size_t n = 0;
    std::size_t dim = 0;
  };
  std::map<std::string, Entry> entries;
};

SidecarIndex load_sidecar_manifest(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw DataError("cannot open sidecar manifest '" + manifest_path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("sidecar manifest '" + manifest_path + "': " + e.what());
  }
  SidecarIndex idx;
  std::string bin = j.at("features_file").get<std::string>();
  // Relative bin paths resolve next to the manifest.
  auto slash = manifest_path.find_last_of('/');
  if (!bin.empty() && bin.front() != '/' && slash != std::string::npos)
    bin = manifest_path.substr(0, slash + 1) + bin;
  idx.bin_path = bin;
  for (const auto& [id, e] : j.at("instances").items()) {
    idx.entries[id] = {e.at("offset").get<std::size_t>(), e.at("n").get<std::size_t>(),
                       e.at("dim").get<std::size_t>()};
  }
  return idx;
}

std::vector<std::vector<double>> read_sidecar_features(std::ifstream& bin,
                                                       const SidecarIndex::Entry& e,
                                                       const std::string& id) {
  bin.seekg(static_cast<std::streamoff>(e.offset * sizeof(float)));
  std::vector<float> raw(e.n * e.dim);
  bin.read(reinterpret_cast<char*>(raw.data()),
           static_cast<std::streamsize>(raw.size() * sizeof(float)));
  if (!bin) throw DataError("sidecar features truncated for instance '" + id + "'");
  std::vector<std::vector<double>> out(e.n, std::vector<double>(e.dim));
  for (std::size_t i = 0; i < e.n; ++i)
    for (std::size_t d = 0; d < e.dim; ++d) out[i][d] = raw[i * e.dim + d];
  return out;
}

}  // namespace

Corpus load_corpus(const std::string& path, const std::optional<SidecarOptions>& sidecar) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file '" + path + "'");

  std::optional<SidecarIndex> idx;
  std::ifstream bin;
  if (sidecar) {
    idx = load_sidecar_manifest(sidecar->manifest_path);
    bin.open(idx->bin_path, std::ios::binary);
    if (!bin) throw DataError("cannot open sidecar features '" + idx->bin_path + "'");
  }

  Corpus corpus;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(line_err(path, lineno, std::string("invalid JSON: ") + e.what()));
    }
    try {
      AdInstance inst = instance_from_json(j);
      if (inst.region_features.empty() && idx) {
        auto it = idx->entries.find(inst.id);
        if (it == idx->entries.end())
          throw DataError("no sidecar entry for instance '" + inst.id + "'");
        inst.region_features = read_sidecar_features(bin, it->second, inst.id);
      }
      corpus.add(std::move(inst));
    } catch (const json::exception& e) {
      throw DataError(line_err(path, lineno, std::string("bad record: ") + e.what()));
    } catch (const DataError& e) {
      throw DataError(line_err(path, lineno, e.what()));
    }
  }
  if (corpus.empty())
    std::cerr << "warning: corpus '" << path << "' is empty\n";
  return corpus;
}

void save_corpus(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write corpus file '" + path + "'");
  for (const auto& inst : corpus.instances()) out << instance_to_json(inst).dump() << "\n";
}

KeyphraseVocab build_vocab(const Corpus& corpus) {
  if (corpus.empty()) throw DataError("build_vocab on empty corpus");
  std::vector<std::string> phrases;
  for (const auto& inst : corpus.instances())
    for (const auto& l : inst.labels) phrases.push_back(l.text());
  return KeyphraseVocab::from_phrases(std::move(phrases));
}

namespace {
std::string trimmed(const std::string& s) {
  auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}
}  // namespace

std::string compose_text(const AdInstance& inst, FeatureSet fs) {
  std::vector<std::string> segments;
  if (uses_questions(fs)) {
    std::string q;
    for (const auto& s : inst.questions) {
      std::string t = trimmed(s);
      if (t.empty()) continue;
      if (!q.empty()) q += ' ';
      q += t;
    }
    if (!q.empty()) segments.push_back(q);
  }
  if (uses_ocr(fs)) {
    std::string o = trimmed(inst.ocr_text);
    if (!o.empty()) segments.push_back(o);
  }
  if (uses_wiki(fs)) {
    std::string w = trimmed(inst.wiki_text);
    if (!w.empty()) segments.push_back(w);
  }
  std::string out;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (i) out += " [SEP] ";
    out += segments[i];
  }
  return out;
}

CorpusSplit split_corpus(const Corpus& corpus, std::uint64_t seed) {
  const std::size_t n = corpus.size();
  if (n < 3) throw DataError("split_corpus needs at least 3 instances");
  std::vector<std::string> ids;
  ids.reserve(n);
  for (const auto& inst : corpus.instances()) ids.push_back(inst.id);
  Rng rng = Rng::stream(seed, "split");
  rng.shuffle(ids);

  const auto n_test = static_cast<std::size_t>(std::llround(0.2 * static_cast<double>(n)));
  const std::size_t n_train0 = n - n_test;
  auto n_val = static_cast<std::size_t>(std::llround(0.1 * static_cast<double>(n_train0)));
  if (n_val < 1) n_val = 1;

  CorpusSplit split;
  split.seed = seed;
  split.train.assign(ids.begin(), ids.begin() + static_cast<long>(n_train0 - n_val));
  split.val.assign(ids.begin() + static_cast<long>(n_train0 - n_val),
                   ids.begin() + static_cast<long>(n_train0));
  split.test.assign(ids.begin() + static_cast<long>(n_train0), ids.end());
  return split;
}

StatsReport corpus_stats(const Corpus& corpus) {
  if (corpus.empty()) throw DataError("corpus_stats on empty corpus");
  StatsReport r;
  r.instances = corpus.size();
  std::map<std::string, std::size_t> per_brand;
  std::map<std::string, std::set<std::string>> cat_phrases;
  std::set<std::string> phrases;
  for (const auto& inst : corpus.instances()) {
    ++per_brand[inst.brand];
    ++r.images_per_category[inst.category];
    ++r.keyphrases_per_instance[static_cast<int>(inst.labels.size())];
    for (const auto& l : inst.labels) {
      phrases.insert(l.text());
      cat_phrases[inst.category].insert(l.text());
      ++r.words_per_keyphrase[static_cast<int>(l.phrase.size())];
    }
  }
  r.brands = per_brand.size();
  r.categories = r.images_per_category.size();
  r.unique_phrases = phrases.size();
  r.brand_images_min = per_brand.begin()->second;
  r.brand_images_max = 0;
  std::size_t total = 0;
  for (const auto& [_, c] : per_brand) {
    r.brand_images_min = std::min(r.brand_images_min, c);
    r.brand_images_max = std::max(r.brand_images_max, c);
    total += c;
  }
  r.brand_images_mean = static_cast<double>(total) / static_cast<double>(per_brand.size());
  for (const auto& [cat, ps] : cat_phrases) r.unique_phrases_per_category[cat] = ps.size();
  return r;
}

std::string StatsReport::to_json() const {
  json j;
  j["instances"] = instances;
  j["brands"] = brands;
  j["categories"] = categories;
  j["unique_phrases"] = unique_phrases;
  j["images_per_brand"] = {{"min", brand_images_min},
                           {"mean", brand_images_mean},
                           {"max", brand_images_max}};
  j["images_per_category"] = images_per_category;
  j["unique_phrases_per_category"] = unique_phrases_per_category;
  json kpi = json::object();
  for (const auto& [k, v] : keyphrases_per_instance) kpi[std::to_string(k)] = v;
  j["keyphrases_per_instance"] = kpi;
  json wpk = json::object();
  for (const auto& [k, v] : words_per_keyphrase) wpk[std::to_string(k)] = v;
  j["words_per_keyphrase"] = wpk;
  return j.dump(2);
}

namespace {
void table_section(std::ostringstream& os, const std::string& title,
                   const std::map<std::string, std::size_t>& rows) {
  os << title << "\n";
  std::size_t w = 8;
  for (const auto& [k, _] : rows) w = std::max(w, k.size());
  for (const auto& [k, v] : rows) {
    os << "  " << k;
    for (std::size_t i = k.size(); i < w + 2; ++i) os << ' ';
    os << v << "\n";
  }
}
}  // namespace

std::string StatsReport::to_table() const {
  std::ostringstream os;
  os << "corpus statistics\n";
  os << "  instances       " << instances << "\n";
  os << "  brands          " << brands << "\n";
  os << "  categories      " << categories << "\n";
  os << "  unique phrases  " << unique_phrases << "\n";
  os << "  images per brand (min/mean/max)  " << brand_images_min << " / " << brand_images_mean
     << " / " << brand_images_max << "\n";
  table_section(os, "images per category", images_per_category);
  table_section(os, "unique phrases per category", unique_phrases_per_category);
  std::map<std::string, std::size_t> kpi, wpk;
  for (const auto& [k, v] : keyphrases_per_instance) kpi[std::to_string(k)] = v;
  for (const auto& [k, v] : words_per_keyphrase) wpk[std::to_string(k)] = v;
  table_section(os, "keyphrases per instance", kpi);
  table_section(os, "words per keyphrase", wpk);
  return os.str();
}

}  // namespace adtheme
