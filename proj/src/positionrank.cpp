#include "adtheme/positionrank.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include <Eigen/Dense>

namespace adtheme {

const std::set<std::string>& english_stopwords() {
  static const std::set<std::string> words = {
      "a", "about", "above", "after", "again", "against", "all", "also", "am", "an", "and",
      "any", "are", "as", "at", "be", "because", "been", "before", "being", "below",
      "between", "both", "but", "by", "came", "can", "cannot", "come", "could", "did",
      "do", "does", "doing", "down", "during", "each", "else", "ever", "every", "few",
      "first", "for", "from", "further", "get", "got", "had", "has", "have", "having",
      "he", "her", "here", "hers", "herself", "him", "himself", "his", "how", "i", "if",
      "in", "into", "is", "it", "its", "itself", "just", "last", "let", "like", "made",
      "make", "many", "may", "me", "might", "more", "most", "much", "must", "my",
      "myself", "never", "next", "no", "nor", "not", "now", "of", "off", "on", "once",
      "only", "or", "other", "our", "ours", "ourselves", "out", "over", "own", "said",
      "same", "she", "should", "since", "so", "some", "still", "such", "than", "that",
      "the", "their", "theirs", "them", "themselves", "then", "there", "these", "they",
      "this", "those", "through", "to", "too", "under", "until", "up", "upon", "us",
      "very", "was", "we", "well", "were", "what", "when", "where", "which", "while",
      "who", "whom", "why", "will", "with", "would", "yet", "you", "your", "yours",
      "yourself", "yourselves"};
  return words;
}

std::vector<std::string> alpha_tokens(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalpha(c)) {
      cur += static_cast<char>(std::tolower(c));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

namespace {

struct Token {
  std::string word;
  std::size_t position = 0;  // 1-based, continuous over all answers
  std::size_t answer = 0;
  bool candidate = false;
};

std::vector<Token> pooled_tokens(const std::vector<std::string>& answers) {
  std::vector<Token> tokens;
  std::size_t pos = 0;
  const auto& stop = english_stopwords();
  for (std::size_t a = 0; a < answers.size(); ++a) {
    for (auto& w : alpha_tokens(answers[a])) {
      Token t;
      t.candidate = stop.count(w) == 0;
      t.word = std::move(w);
      t.position = ++pos;
      t.answer = a;
      tokens.push_back(std::move(t));
    }
  }
  return tokens;
}

}  // namespace

std::map<std::string, double> positionrank_scores(const std::vector<std::string>& answers) {
  constexpr std::size_t kWindow = 3;
  constexpr double kDamping = 0.85;
  constexpr double kTol = 1e-8;
  constexpr int kMaxIters = 100;

  const std::vector<Token> tokens = pooled_tokens(answers);

  std::map<std::string, int> node_of;
  std::vector<std::string> words;
  std::map<std::string, double> bias;  // sum of inverse positions
  for (const auto& t : tokens) {
    if (!t.candidate) continue;
    if (!node_of.count(t.word)) {
      node_of.emplace(t.word, static_cast<int>(words.size()));
      words.push_back(t.word);
    }
    bias[t.word] += 1.0 / static_cast<double>(t.position);
  }
  const int n = static_cast<int>(words.size());
  if (n == 0) return {};

  Eigen::VectorXd p(n);
  for (int i = 0; i < n; ++i) p(i) = bias[words[i]];
  p /= p.sum();

  // Symmetric co-occurrence weights; edges never cross answer boundaries.
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!tokens[i].candidate) continue;
    for (std::size_t j = i + 1; j < tokens.size(); ++j) {
      if (tokens[j].position - tokens[i].position >= kWindow) break;
      if (tokens[j].answer != tokens[i].answer) break;
      if (!tokens[j].candidate) continue;
      int a = node_of[tokens[i].word], b = node_of[tokens[j].word];
      if (a == b) continue;
      w(a, b) += 1.0;
      w(b, a) += 1.0;
    }
  }

  Eigen::VectorXd out_weight = w.rowwise().sum();
  Eigen::VectorXd s = p;
  for (int iter = 0; iter < kMaxIters; ++iter) {
    Eigen::VectorXd next = Eigen::VectorXd::Zero(n);
    double dangling = 0;
    for (int j = 0; j < n; ++j) {
      if (out_weight(j) > 0)
        next += (s(j) / out_weight(j)) * w.col(j);
      else
        dangling += s(j);
    }
    next = (1.0 - kDamping) * p + kDamping * (next + dangling * p);
    double delta = (next - s).lpNorm<1>();
    s = next;
    if (delta < kTol) break;
  }

  std::map<std::string, double> scores;
  for (int i = 0; i < n; ++i) scores[words[i]] = s(i);
  return scores;
}

std::vector<ScoredKeyphrase> extract_keyphrases(const std::vector<std::string>& answers,
                                                int max_k) {
  constexpr std::size_t kMaxPhraseWords = 8;
  const auto scores = positionrank_scores(answers);
  if (scores.empty()) return {};

  const std::vector<Token> tokens = pooled_tokens(answers);

  struct Ranked {
    std::vector<std::string> words;
    std::string key;
    double score = 0;
  };
  std::map<std::string, double> seen;
  std::vector<Ranked> phrases;
  std::size_t i = 0;
  while (i < tokens.size()) {
    if (!tokens[i].candidate) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < tokens.size() && tokens[j].candidate && tokens[j].answer == tokens[i].answer &&
           j - i < kMaxPhraseWords)
      ++j;
    Ranked r;
    for (std::size_t k = i; k < j; ++k) {
      r.words.push_back(tokens[k].word);
      r.score += scores.at(tokens[k].word);
    }
    r.key = phrase_key(r.words);
    if (!seen.count(r.key)) {
      seen.emplace(r.key, r.score);
      phrases.push_back(std::move(r));
    }
    // A run longer than the cap continues as a fresh chunk at j.
    i = j;
  }

  std::stable_sort(phrases.begin(), phrases.end(), [](const Ranked& a, const Ranked& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.key < b.key;
  });

  std::vector<ScoredKeyphrase> out;
  const int k = std::min<int>(max_k, std::min<int>(static_cast<int>(phrases.size()),
                                                   static_cast<int>(kScoreLadder.size())));
  for (int r = 0; r < k; ++r) {
    ScoredKeyphrase kp;
    kp.phrase = phrases[static_cast<std::size_t>(r)].words;
    kp.score = kScoreLadder[static_cast<std::size_t>(r)];
    out.push_back(std::move(kp));
  }
  return out;
}

}  // namespace adtheme
