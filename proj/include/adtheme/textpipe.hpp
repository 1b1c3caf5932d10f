#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace adtheme {

// Lowercased whitespace tokens with punctuation split off as single-char
// tokens. The literal separator token "[SEP]" passes through intact.
std::vector<std::string> basic_tokens(const std::string& text);

class TokenVocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kCls = 2;
  static constexpr int kSep = 3;
  static constexpr std::size_t kNumSpecials = 4;

  // Whole words by descending frequency (first appearance breaks ties),
  // then "c"/"##c" character fallback pieces, truncated to `size`.
  static TokenVocab build(const std::vector<std::string>& texts, std::size_t size);
  // Exact piece list (specials first), validated.
  static TokenVocab from_pieces(const std::vector<std::string>& pieces);
  static TokenVocab load(const std::string& path);
  void save(const std::string& path) const;

  std::size_t size() const { return pieces_.size(); }
  int id(const std::string& piece) const;  // -1 when absent
  const std::string& piece(int id) const;

 private:
  void push(const std::string& piece);
  std::vector<std::string> pieces_;
  std::unordered_map<std::string, int> ids_;
};

struct TokenSequence {
  std::vector<int> ids;        // starts with [CLS]
  std::vector<int> positions;  // 0..l-1
  std::vector<std::uint8_t> mask;  // 1 real, 0 padding
};

struct TextEmbedParams {
  Eigen::MatrixXd token_table;     // |V_t| x D
  Eigen::MatrixXd position_table;  // |V_p| x D
};

// Greedy longest-prefix subword split with "##" continuations; words with an
// uncoverable remainder collapse to a single [UNK]. Wraps with [CLS]/[SEP]
// and truncates to max_len keeping [CLS] first and [SEP] last.
TokenSequence tokenize(const std::string& text, const TokenVocab& vocab, int max_len);

// Extends with [PAD] ids (mask 0) up to `len`.
TokenSequence pad(TokenSequence seq, int len);

// Row j = 0.5 * (token_table[id_j] + position_table[pos_j]).
Eigen::MatrixXd embed_text(const TokenSequence& seq, const TextEmbedParams& params);

}  // namespace adtheme
