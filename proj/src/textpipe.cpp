#include "adtheme/textpipe.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "adtheme/errors.hpp"

namespace adtheme {

namespace {
const std::string kSepLiteral = "[SEP]";
}

std::vector<std::string> basic_tokens(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream ss(text);
  std::string raw;
  while (ss >> raw) {
    std::string lowered;
    for (unsigned char c : raw) lowered += static_cast<char>(std::tolower(c));
    if (lowered == "[sep]") {
      out.push_back(kSepLiteral);
      continue;
    }
    std::string cur;
    for (unsigned char c : lowered) {
      if (std::isalnum(c)) {
        cur += static_cast<char>(c);
      } else {
        if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
        out.push_back(std::string(1, static_cast<char>(c)));
      }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
  }
  return out;
}

void TokenVocab::push(const std::string& piece) {
  if (ids_.count(piece)) return;
  ids_.emplace(piece, static_cast<int>(pieces_.size()));
  pieces_.push_back(piece);
}

TokenVocab TokenVocab::build(const std::vector<std::string>& texts, std::size_t size) {
  if (size < 2 * kNumSpecials)
    throw ConfigError("token vocab size must be at least " + std::to_string(2 * kNumSpecials));
  std::map<std::string, std::size_t> freq;
  std::map<std::string, std::size_t> first_seen;
  std::set<char> chars;
  std::size_t order = 0;
  for (const auto& text : texts) {
    for (auto& tok : basic_tokens(text)) {
      if (tok == kSepLiteral) continue;
      if (!freq.count(tok)) first_seen[tok] = order++;
      ++freq[tok];
      for (char c : tok) chars.insert(c);
    }
  }
  std::vector<std::string> words;
  for (const auto& [w, _] : freq) words.push_back(w);
  std::sort(words.begin(), words.end(), [&](const std::string& a, const std::string& b) {
    if (freq[a] != freq[b]) return freq[a] > freq[b];
    return first_seen[a] < first_seen[b];
  });

  TokenVocab v;
  v.push("[PAD]");
  v.push("[UNK]");
  v.push("[CLS]");
  v.push(kSepLiteral);
  for (const auto& w : words) {
    if (v.pieces_.size() >= size) break;
    v.push(w);
  }
  for (char c : chars) {
    if (v.pieces_.size() >= size) break;
    v.push(std::string(1, c));
    if (v.pieces_.size() >= size) break;
    v.push(std::string("##") + c);
  }
  return v;
}

TokenVocab TokenVocab::from_pieces(const std::vector<std::string>& pieces) {
  TokenVocab v;
  for (const auto& piece : pieces) {
    if (v.ids_.count(piece)) throw DataError("duplicate token '" + piece + "' in vocab");
    v.push(piece);
  }
  if (v.size() < kNumSpecials || v.pieces_[0] != "[PAD]" || v.pieces_[1] != "[UNK]" ||
      v.pieces_[2] != "[CLS]" || v.pieces_[3] != kSepLiteral)
    throw DataError("token vocab must begin [PAD],[UNK],[CLS],[SEP]");
  return v;
}

TokenVocab TokenVocab::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open token vocab '" + path + "'");
  std::vector<std::string> pieces;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    pieces.push_back(line);
  }
  try {
    return from_pieces(pieces);
  } catch (const DataError& e) {
    throw DataError(std::string(e.what()) + " (from '" + path + "')");
  }
}

void TokenVocab::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write token vocab '" + path + "'");
  for (const auto& p : pieces_) out << p << "\n";
}

int TokenVocab::id(const std::string& piece) const {
  auto it = ids_.find(piece);
  return it == ids_.end() ? -1 : it->second;
}

const std::string& TokenVocab::piece(int id) const {
  if (id < 0 || id >= static_cast<int>(pieces_.size()))
    throw ShapeError("token id out of range");
  return pieces_[static_cast<std::size_t>(id)];
}

namespace {

// Greedy longest-prefix WordPiece split; returns false when some remainder
// has no matching piece, in which case the whole word becomes [UNK].
bool wordpiece_split(const std::string& word, const TokenVocab& vocab, std::vector<int>& out) {
  std::size_t start = 0;
  std::vector<int> ids;
  while (start < word.size()) {
    std::size_t end = word.size();
    int found = -1;
    while (end > start) {
      std::string piece = word.substr(start, end - start);
      if (start > 0) piece = "##" + piece;
      found = vocab.id(piece);
      if (found >= 0) break;
      --end;
    }
    if (found < 0) return false;
    ids.push_back(found);
    start = end;
  }
  out.insert(out.end(), ids.begin(), ids.end());
  return true;
}

}  // namespace

TokenSequence tokenize(const std::string& text, const TokenVocab& vocab, int max_len) {
  if (max_len < 2) throw ConfigError("tokenize needs max_len >= 2");
  std::vector<int> ids{TokenVocab::kCls};
  for (const auto& tok : basic_tokens(text)) {
    if (tok == kSepLiteral) {
      ids.push_back(TokenVocab::kSep);
      continue;
    }
    std::vector<int> pieces;
    if (wordpiece_split(tok, vocab, pieces))
      ids.insert(ids.end(), pieces.begin(), pieces.end());
    else
      ids.push_back(TokenVocab::kUnk);
  }
  ids.push_back(TokenVocab::kSep);
  if (ids.size() > static_cast<std::size_t>(max_len)) {
    ids.resize(static_cast<std::size_t>(max_len));
    ids.back() = TokenVocab::kSep;
  }
  TokenSequence seq;
  seq.ids = std::move(ids);
  seq.positions.resize(seq.ids.size());
  for (std::size_t i = 0; i < seq.ids.size(); ++i) seq.positions[i] = static_cast<int>(i);
  seq.mask.assign(seq.ids.size(), 1);
  return seq;
}

TokenSequence pad(TokenSequence seq, int len) {
  if (static_cast<std::size_t>(len) < seq.ids.size())
    throw ShapeError("pad target shorter than sequence");
  while (seq.ids.size() < static_cast<std::size_t>(len)) {
    seq.positions.push_back(static_cast<int>(seq.ids.size()));
    seq.ids.push_back(TokenVocab::kPad);
    seq.mask.push_back(0);
  }
  return seq;
}

Eigen::MatrixXd embed_text(const TokenSequence& seq, const TextEmbedParams& params) {
  if (params.token_table.cols() != params.position_table.cols())
    throw ShapeError("token and position embedding widths differ");
  const auto l = static_cast<Eigen::Index>(seq.ids.size());
  Eigen::MatrixXd h(l, params.token_table.cols());
  for (Eigen::Index j = 0; j < l; ++j) {
    int id = seq.ids[static_cast<std::size_t>(j)];
    int pos = seq.positions[static_cast<std::size_t>(j)];
    if (id < 0 || id >= params.token_table.rows())
      throw ShapeError("token id " + std::to_string(id) + " outside embedding table");
    if (pos < 0 || pos >= params.position_table.rows())
      throw ShapeError("position " + std::to_string(pos) + " outside embedding table");
    h.row(j) = 0.5 * (params.token_table.row(id) + params.position_table.row(pos));
  }
  return h;
}

}  // namespace adtheme
