#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "adtheme/positionrank.hpp"
#include "adtheme/rng.hpp"

using namespace adtheme;

namespace {

// Reference ranker, written independently of the library: explicit dense
// Google matrix (teleport folded into every column, dangling columns replaced
// by the bias vector) iterated from the bias vector.
struct RefToken {
  std::string word;
  int pos = 0;  // 1-based over the pooled answers
  int answer = 0;
  bool cand = false;
};

std::vector<RefToken> ref_tokens(const std::vector<std::string>& answers) {
  std::vector<RefToken> out;
  int pos = 0;
  for (std::size_t a = 0; a < answers.size(); ++a) {
    for (const std::string& w : alpha_tokens(answers[a])) {
      RefToken t;
      t.word = w;
      t.pos = ++pos;
      t.answer = static_cast<int>(a);
      t.cand = english_stopwords().count(w) == 0;
      out.push_back(t);
    }
  }
  return out;
}

std::map<std::string, double> ref_scores(const std::vector<std::string>& answers) {
  const auto toks = ref_tokens(answers);
  std::vector<std::string> words;
  std::map<std::string, int> index;
  for (const auto& t : toks) {
    if (t.cand && !index.count(t.word)) {
      index[t.word] = static_cast<int>(words.size());
      words.push_back(t.word);
    }
  }
  const int n = static_cast<int>(words.size());
  if (n == 0) return {};

  Eigen::VectorXd bias = Eigen::VectorXd::Zero(n);
  for (const auto& t : toks)
    if (t.cand) bias(index.at(t.word)) += 1.0 / t.pos;
  bias /= bias.sum();

  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (!toks[i].cand) continue;
    for (std::size_t j = i + 1; j < toks.size(); ++j) {
      if (toks[j].answer != toks[i].answer) break;
      if (toks[j].pos - toks[i].pos >= 3) break;
      if (!toks[j].cand || toks[j].word == toks[i].word) continue;
      w(index.at(toks[i].word), index.at(toks[j].word)) += 1.0;
      w(index.at(toks[j].word), index.at(toks[i].word)) += 1.0;
    }
  }

  Eigen::MatrixXd google(n, n);
  for (int j = 0; j < n; ++j) {
    double colsum = w.col(j).sum();
    Eigen::VectorXd walk = colsum > 0.0 ? Eigen::VectorXd(w.col(j) / colsum) : bias;
    google.col(j) = 0.15 * bias + 0.85 * walk;
  }

  Eigen::VectorXd v = bias;
  for (int it = 0; it < 100; ++it) {
    Eigen::VectorXd next = google * v;
    double delta = (next - v).lpNorm<1>();
    v = next;
    if (delta < 1e-8) break;
  }
  std::map<std::string, double> out;
  for (int i = 0; i < n; ++i) out[words[i]] = v(i);
  return out;
}

std::vector<std::pair<std::string, double>> ref_extract(const std::vector<std::string>& answers) {
  const auto scores = ref_scores(answers);
  const auto toks = ref_tokens(answers);
  std::vector<std::pair<std::string, double>> phrases;
  std::set<std::string> seen;
  std::size_t i = 0;
  while (i < toks.size()) {
    if (!toks[i].cand) {
      ++i;
      continue;
    }
    std::string key;
    double score = 0.0;
    std::size_t j = i;
    for (; j < toks.size() && j - i < 8 && toks[j].cand && toks[j].answer == toks[i].answer; ++j) {
      if (!key.empty()) key += ' ';
      key += toks[j].word;
      score += scores.at(toks[j].word);
    }
    if (seen.insert(key).second) phrases.emplace_back(key, score);
    i = j;
  }
  std::stable_sort(phrases.begin(), phrases.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (phrases.size() > 5) phrases.resize(5);
  return phrases;
}

std::vector<std::string> random_answers(Rng& rng) {
  static const std::vector<std::string> pool = {
      "shoes", "sale",  "durable", "running", "deal", "brand", "fresh", "travel",
      "the",   "and",   "for",     "is",      "are",  "buy",   "offer", "great",
      "light", "cheap", "style",   "summer",  "with", "every", "save",  "now"};
  int n_answers = 1 + static_cast<int>(rng.below(3));
  std::vector<std::string> answers;
  for (int a = 0; a < n_answers; ++a) {
    int len = 2 + static_cast<int>(rng.below(12));
    std::string s;
    for (int i = 0; i < len; ++i) {
      if (i) s += ' ';
      s += pool[static_cast<std::size_t>(rng.below(pool.size()))];
    }
    answers.push_back(std::move(s));
  }
  return answers;
}

}  // namespace

TEST_CASE("stopword list covers the function words used in answer text") {
  const auto& stop = english_stopwords();
  for (const char* w : {"because", "are", "last", "the", "is", "a", "with"}) CHECK(stop.count(w));
  for (const char* w : {"durable", "shoes", "buy", "sale", "great"}) CHECK_FALSE(stop.count(w));
}

TEST_CASE("alpha_tokens lowercases and splits on non-letters") {
  CHECK(alpha_tokens("Hello, World!") == std::vector<std::string>{"hello", "world"});
  CHECK(alpha_tokens("50% off4u") == std::vector<std::string>{"off", "u"});
  CHECK(alpha_tokens("   ") == std::vector<std::string>{});
  CHECK(alpha_tokens("don't") == std::vector<std::string>{"don", "t"});
}

TEST_CASE("single candidate phrase gets the whole score") {
  auto out = extract_keyphrases({"great sale"});
  REQUIRE(out.size() == 1);
  CHECK(out[0].phrase == std::vector<std::string>{"great", "sale"});
  CHECK(out[0].score == 1.0);
}

TEST_CASE("scores match the dense reference and sum to one") {
  std::vector<std::string> answers = {"buy shoes because shoes are durable", "durable shoes last"};
  auto got = positionrank_scores(answers);
  auto want = ref_scores(answers);
  REQUIRE(got.size() == want.size());
  double total = 0.0;
  for (const auto& [word, score] : got) {
    REQUIRE(want.count(word));
    CHECK(score == doctest::Approx(want.at(word)).epsilon(1e-6));
    total += score;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));

  auto top = extract_keyphrases(answers);
  REQUIRE_FALSE(top.empty());
  CHECK(top[0].phrase == std::vector<std::string>{"durable", "shoes"});
  CHECK(top[0].score == 1.0);
}

TEST_CASE("seven distinct phrases return exactly five with the fixed ladder") {
  auto out = extract_keyphrases(
      {"alpha the beta the gamma", "delta the epsilon the zeta", "eta"});
  REQUIRE(out.size() == 5);
  CHECK(out[0].score == 1.0);
  CHECK(out[1].score == 0.9);
  CHECK(out[2].score == 0.8);
  CHECK(out[3].score == 0.7);
  CHECK(out[4].score == 0.6);
  std::set<std::string> keys;
  for (const auto& kp : out) keys.insert(phrase_key(kp.phrase));
  CHECK(keys.size() == 5);
}

TEST_CASE("duplicate phrases collapse; equal scores break ties lexicographically") {
  auto dup = extract_keyphrases({"great sale", "great sale", "great sale"});
  REQUIRE(dup.size() == 1);
  CHECK(dup[0].phrase == std::vector<std::string>{"great", "sale"});

  // Both orderings contain by construction the same two words, so their
  // summed scores tie exactly and the lexicographically smaller key wins.
  auto tie = extract_keyphrases({"alpha beta", "beta alpha"});
  REQUIRE(tie.size() == 2);
  CHECK(phrase_key(tie[0].phrase) == "alpha beta");
  CHECK(phrase_key(tie[1].phrase) == "beta alpha");
}

TEST_CASE("candidate runs are chunked at eight words") {
  auto out = extract_keyphrases(
      {"alpha beta gamma delta epsilon zeta eta theta iota kappa"});
  REQUIRE(out.size() == 2);
  CHECK(out[0].phrase.size() == 8);
  CHECK(out[1].phrase == std::vector<std::string>{"iota", "kappa"});
}

TEST_CASE("stopword-only or empty input yields nothing") {
  CHECK(extract_keyphrases({}).empty());
  CHECK(extract_keyphrases({"the and a of"}).empty());
  CHECK(extract_keyphrases({""}).empty());
  CHECK(positionrank_scores({"the and"}).empty());
}

TEST_CASE("extraction agrees with the reference on randomized documents") {
  Rng rng = Rng::stream(2026, "rank-docs");
  for (int doc = 0; doc < 20; ++doc) {
    auto answers = random_answers(rng);
    auto got = extract_keyphrases(answers);
    auto want = ref_extract(answers);
    INFO("doc ", doc);
    REQUIRE(got.size() == want.size());
    // Near-equal sums may legitimately swap neighbours between two
    // independently iterated score vectors, so compare the selected set.
    std::set<std::string> got_keys, want_keys;
    for (std::size_t i = 0; i < got.size(); ++i) {
      got_keys.insert(phrase_key(got[i].phrase));
      want_keys.insert(want[i].first);
      CHECK(got[i].score == kScoreLadder[i]);
    }
    CHECK(got_keys == want_keys);

    auto scores = positionrank_scores(answers);
    if (!scores.empty()) {
      double total = 0.0;
      for (const auto& [w, s] : scores) {
        CHECK(s >= 0.0);
        total += s;
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}
