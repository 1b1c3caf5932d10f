#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace adtheme {

// Label scores assigned to extracted keyphrases, best first.
inline constexpr std::array<double, 5> kScoreLadder = {1.0, 0.9, 0.8, 0.7, 0.6};
bool is_ladder_score(double s);

struct ScoredKeyphrase {
  std::vector<std::string> phrase;  // lowercase words, 1..8 of them
  double score = 1.0;               // one of kScoreLadder

  std::string text() const;  // words joined with single spaces
  bool operator==(const ScoredKeyphrase&) const = default;
};

// Canonical phrase identity: lowercase, single-space-joined words.
std::string phrase_key(const std::vector<std::string>& words);
std::vector<std::string> split_phrase(const std::string& text);

struct PixelBox {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
  bool operator==(const PixelBox&) const = default;
};

struct AdInstance {
  std::string id;
  double width = 0, height = 0;
  std::vector<std::vector<double>> region_features;  // n rows, D_x each
  std::vector<PixelBox> boxes;                       // n boxes
  std::string ocr_text;
  std::vector<std::string> questions;
  std::string wiki_text;
  std::string brand;
  std::string category;
  std::vector<ScoredKeyphrase> labels;  // 1..5

  void validate() const;  // throws DataError on any invariant violation
};

class Corpus {
 public:
  void add(AdInstance inst);  // validates; throws DataError on duplicate id
  std::size_t size() const { return instances_.size(); }
  bool empty() const { return instances_.empty(); }
  const AdInstance& at(std::size_t i) const { return instances_[i]; }
  const AdInstance& by_id(const std::string& id) const;
  bool has_id(const std::string& id) const { return index_.count(id) != 0; }
  const std::vector<AdInstance>& instances() const { return instances_; }
  int feature_dim() const;  // D_x, uniform across the corpus

 private:
  std::vector<AdInstance> instances_;
  std::unordered_map<std::string, std::size_t> index_;
};

// The seven ablation rows of the classification table. NDCG-style ranking
// rows use the first five.
enum class FeatureSet { I, IxQ, IxQW, IxQO, IxQWO, QWO, NonCrossModal };

const std::vector<FeatureSet>& all_feature_sets();
const std::vector<FeatureSet>& ranking_feature_sets();
std::string to_string(FeatureSet fs);
FeatureSet feature_set_from_string(const std::string& s);
bool uses_image(FeatureSet fs);
bool uses_questions(FeatureSet fs);
bool uses_ocr(FeatureSet fs);
bool uses_wiki(FeatureSet fs);

// Dense phrase-string <-> index map, lexicographic order.
class KeyphraseVocab {
 public:
  static KeyphraseVocab from_phrases(std::vector<std::string> phrases);
  std::size_t size() const { return phrases_.size(); }
  const std::string& phrase(int idx) const;
  int index(const std::string& phrase) const;  // -1 when absent
  bool contains(const std::string& phrase) const { return index(phrase) >= 0; }
  const std::vector<std::string>& phrases() const { return phrases_; }

 private:
  std::vector<std::string> phrases_;
  std::unordered_map<std::string, int> index_;
};

struct CorpusSplit {
  std::vector<std::string> train, val, test;
  std::uint64_t seed = 0;
};

struct SidecarOptions {
  // Manifest JSON mapping id -> {offset, n, dim}; offsets count floats in
  // the companion .bin file of little-endian float32 region features.
  std::string manifest_path;
};

// ---- operations ----

// Reads one AdInstance per JSONL line. Errors name the offending line.
// When `sidecar` is given, records may omit inline region_features and have
// them resolved from the binary sidecar instead.
Corpus load_corpus(const std::string& path,
                   const std::optional<SidecarOptions>& sidecar = std::nullopt);

// Writes the corpus back out, one JSON object per line, inline features.
void save_corpus(const Corpus& corpus, const std::string& path);

KeyphraseVocab build_vocab(const Corpus& corpus);

// Enabled text sources joined in the fixed order Q, O, W with " [SEP] ".
// Sources that are empty after trimming contribute no segment.
std::string compose_text(const AdInstance& inst, FeatureSet fs);

// 80/20 train/test by seeded shuffle, then round(0.1 * |train|) validation
// instances (at least one) moved out of train.
CorpusSplit split_corpus(const Corpus& corpus, std::uint64_t seed);

struct BrandCount {
  std::string brand;
  std::size_t images = 0;
};

struct StatsReport {
  std::size_t instances = 0;
  std::size_t brands = 0;
  std::size_t categories = 0;
  std::size_t unique_phrases = 0;
  std::size_t brand_images_min = 0;
  double brand_images_mean = 0;
  std::size_t brand_images_max = 0;
  std::map<std::string, std::size_t> images_per_category;
  std::map<std::string, std::size_t> unique_phrases_per_category;
  std::map<int, std::size_t> keyphrases_per_instance;  // histogram
  std::map<int, std::size_t> words_per_keyphrase;      // histogram

  std::string to_json() const;
  std::string to_table() const;  // aligned-column text rendering
};

StatsReport corpus_stats(const Corpus& corpus);

}  // namespace adtheme
