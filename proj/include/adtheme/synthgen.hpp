#pragma once

#include <cstdint>

#include "adtheme/corpus.hpp"

namespace adtheme {

// Deterministic fixture corpora. All share the property that region features
// are low-dimensional and every instance validates.

// One class per instance (i mod n_classes), signalled redundantly in the
// image block and the question text; single 1.0-score label per class.
Corpus make_overfit_corpus(std::uint64_t seed, int n, int n_classes, int d_x);

// Labels require combining modalities: visual class v (planted block) and
// textual cue c (question word) give label class (v + c) mod m. The (v, c)
// grid is covered evenly, so no single modality predicts the label.
Corpus make_crossmodal_corpus(std::uint64_t seed, int n, int m);

// Relevance = topic-term overlap: each instance's text names one topic, and
// its labels are exactly the topic's phrases ("<topic> sale/deal/offer",
// scores 1.0/0.9/0.8). The shared vocabulary spans all topics.
Corpus make_ranking_corpus(std::uint64_t seed, int n, int n_topics);

// Demo corpus with brands, categories and labels produced by the keyphrase
// extractor over synthetic answer sentences.
Corpus make_toy_corpus(std::uint64_t seed, int n, int d_x);

}  // namespace adtheme
