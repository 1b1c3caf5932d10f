#include "adtheme/synthgen.hpp"

#include <array>
#include <string>
#include <vector>

#include "adtheme/errors.hpp"
#include "adtheme/positionrank.hpp"
#include "adtheme/rng.hpp"

namespace adtheme {

namespace {

const std::array<std::string, 16> kCodeWords = {
    "alder", "birch", "cedar", "dune",  "ember", "fern",  "grove", "haze",
    "iris",  "jade",  "kelp",  "lumen", "moss",  "nectar", "opal",  "pine"};

AdInstance base_instance(Rng& rng, const std::string& id, int n_regions, int d_x) {
  AdInstance inst;
  inst.id = id;
  inst.width = 128;
  inst.height = 128;
  for (int i = 0; i < n_regions; ++i) {
    double x1 = 100.0 * rng.unit();
    double y1 = 100.0 * rng.unit();
    inst.boxes.push_back({x1, y1, x1 + 4 + 20.0 * rng.unit(), y1 + 4 + 20.0 * rng.unit()});
    std::vector<double> f(static_cast<std::size_t>(d_x));
    for (auto& v : f) v = 0.1 * rng.normal();
    inst.region_features.push_back(std::move(f));
  }
  return inst;
}

}  // namespace

Corpus make_overfit_corpus(std::uint64_t seed, int n, int n_classes, int d_x) {
  if (n_classes < 1 || n_classes > static_cast<int>(kCodeWords.size()))
    throw ConfigError("n_classes must lie in [1, 16]");
  if (d_x < n_classes) throw ConfigError("d_x must be >= n_classes for the planted block");
  Corpus corpus;
  Rng rng = Rng::stream(seed, "overfit-gen");
  for (int i = 0; i < n; ++i) {
    const int k = i % n_classes;
    AdInstance inst = base_instance(rng, "fit-" + std::to_string(i), 3, d_x);
    inst.region_features[0][static_cast<std::size_t>(k)] += 8.0;
    inst.questions = {"why pick the " + kCodeWords[static_cast<std::size_t>(k)] + " line"};
    inst.ocr_text = kCodeWords[static_cast<std::size_t>(k)] + " savings now";
    inst.wiki_text = "retailer of " + kCodeWords[static_cast<std::size_t>(k)] + " goods";
    inst.brand = "brand-" + std::to_string(k % 4);
    inst.category = "category-" + std::to_string(k % 2);
    inst.labels = {{{kCodeWords[static_cast<std::size_t>(k)], "sale"}, 1.0}};
    corpus.add(std::move(inst));
  }
  return corpus;
}

Corpus make_crossmodal_corpus(std::uint64_t seed, int n, int m) {
  if (m < 2 || m > static_cast<int>(kCodeWords.size()))
    throw ConfigError("m must lie in [2, 16]");
  Corpus corpus;
  Rng rng = Rng::stream(seed, "xmod-gen");
  const int d_x = m;
  for (int i = 0; i < n; ++i) {
    // Even coverage of the (visual, cue) grid.
    const int v = (i / m) % m;
    const int c = i % m;
    const int label = (v + c) % m;
    AdInstance inst = base_instance(rng, "xm-" + std::to_string(i), 3, d_x);
    inst.region_features[0][static_cast<std::size_t>(v)] += 8.0;
    inst.questions = {"is this the " + kCodeWords[static_cast<std::size_t>(c)] + " edition"};
    inst.ocr_text = "limited offer";
    inst.wiki_text = "a storied maker of seasonal goods";
    inst.brand = "brand-" + std::to_string(i % 5);
    inst.category = "category-" + std::to_string(i % 2);
    inst.labels = {{{kCodeWords[static_cast<std::size_t>(label)], "promo"}, 1.0}};
    corpus.add(std::move(inst));
  }
  return corpus;
}

Corpus make_ranking_corpus(std::uint64_t seed, int n, int n_topics) {
  if (n_topics < 2 || n_topics > static_cast<int>(kCodeWords.size()))
    throw ConfigError("n_topics must lie in [2, 16]");
  Corpus corpus;
  Rng rng = Rng::stream(seed, "rank-gen");
  for (int i = 0; i < n; ++i) {
    const auto& topic = kCodeWords[static_cast<std::size_t>(i % n_topics)];
    AdInstance inst = base_instance(rng, "rk-" + std::to_string(i), 2, 4);
    inst.questions = {"why choose " + topic + " today"};
    inst.ocr_text = topic + " shop now";
    inst.wiki_text = "all about the " + topic + " collection";
    inst.brand = "brand-" + std::to_string(i % n_topics);
    inst.category = "category-" + std::to_string(i % 2);
    inst.labels = {{{topic, "sale"}, 1.0}, {{topic, "deal"}, 0.9}, {{topic, "offer"}, 0.8}};
    corpus.add(std::move(inst));
  }
  return corpus;
}

Corpus make_toy_corpus(std::uint64_t seed, int n, int d_x) {
  static const std::array<std::string, 8> products = {"shoes",  "jackets", "watches", "phones",
                                                      "sofas",  "bikes",   "lamps",   "drones"};
  static const std::array<std::string, 6> adjectives = {"durable", "stylish", "affordable",
                                                        "premium", "compact", "modern"};
  static const std::array<std::string, 5> brands = {"northlane", "vexa", "orbiton", "galecrest",
                                                    "mirelle"};
  Corpus corpus;
  Rng rng = Rng::stream(seed, "toy-gen");
  for (int i = 0; i < n; ++i) {
    const auto& product = products[rng.below(products.size())];
    const auto& adj1 = adjectives[rng.below(adjectives.size())];
    const auto& adj2 = adjectives[rng.below(adjectives.size())];
    const auto& brand = brands[rng.below(brands.size())];

    AdInstance inst = base_instance(rng, "toy-" + std::to_string(i), 2 + static_cast<int>(rng.below(3)), d_x);
    inst.questions = {"why buy " + product + " here", "what makes these " + product + " special"};
    inst.ocr_text = adj1 + " " + product + " on sale";
    inst.wiki_text = brand + " is known for " + adj2 + " " + product;
    inst.brand = brand;
    inst.category = product;

    std::vector<std::string> answers = {
        "buy " + product + " because they are " + adj1,
        adj1 + " " + product + " with " + adj2 + " design",
        "the " + brand + " " + product + " offer great value"};
    auto labels = extract_keyphrases(answers, 5);
    if (labels.empty()) labels = {{{product}, 1.0}};
    inst.labels = std::move(labels);
    corpus.add(std::move(inst));
  }
  return corpus;
}

}  // namespace adtheme
