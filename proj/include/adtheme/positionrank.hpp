#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "adtheme/corpus.hpp"

namespace adtheme {

// Built-in English stopword list used for candidate filtering (documented in
// docs/pipeline.md).
const std::set<std::string>& english_stopwords();

// Lowercased maximal runs of ASCII letters; everything else separates tokens.
std::vector<std::string> alpha_tokens(const std::string& text);

// Stationary distribution of the position-biased PageRank over the word
// co-occurrence graph of the pooled answers. Keys are candidate words
// (non-stopword alphabetic tokens); values sum to 1 when non-empty.
// Parameters: window w 3 (tokens co-occur iff their position gap is < 3 and
// they sit in the same answer), damping 0.85, power iteration until the L1
// change drops below 1e-8 or 100 rounds. Self-loops are excluded; dangling
// mass is redistributed through the position-bias teleport vector.
std::map<std::string, double> positionrank_scores(const std::vector<std::string>& answers);

// Top keyphrases of the pooled answers: maximal runs of candidate words
// (capped at 8 words), scored by the sum of their words' PageRank scores,
// deduplicated, ranked descending (ties broken lexicographically), and
// assigned the fixed scores 1.0, 0.9, 0.8, 0.7, 0.6 in output order.
std::vector<ScoredKeyphrase> extract_keyphrases(const std::vector<std::string>& answers,
                                                int max_k = 5);

}  // namespace adtheme
