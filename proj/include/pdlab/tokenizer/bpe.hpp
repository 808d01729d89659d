#pragma once

#include "pdlab/frontend/token.hpp"

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace pdlab {

/// Kind slot for subtokens that carry no code token kind ([CLS] and
/// word-boundary-only pieces).
inline constexpr int kNoKind = -1;

inline constexpr std::size_t kDefaultVocabSize = 4096;

/// Byte-level BPE model. Token strings use the printable byte-to-unicode
/// mapping popularized by GPT-2, so the word-boundary marker is "Ġ".
///
/// Id layout: 0..3 are [CLS], [MASK], [PAD], [UNK]; 4..259 the 256 byte
/// symbols; merge results follow in merge order.
class BpeModel {
 public:
  BpeModel();

  static constexpr int kCls = 0;
  static constexpr int kMask = 1;
  static constexpr int kPad = 2;
  static constexpr int kUnk = 3;
  static constexpr int kSpecialCount = 4;
  static constexpr int kBaseSize = kSpecialCount + 256;

  std::size_t size() const { return vocab_.size(); }
  const std::vector<std::string>& vocab() const { return vocab_; }
  const std::vector<std::pair<std::string, std::string>>& merges() const { return merges_; }

  /// Id of a vocabulary entry, or kUnk.
  int id_of(const std::string& token) const;
  const std::string& token(int id) const { return vocab_.at(static_cast<std::size_t>(id)); }
  bool is_special(int id) const { return id >= 0 && id < kSpecialCount; }

  /// Appends a merge and its result to the vocabulary.
  void add_merge(const std::string& left, const std::string& right);

  /// Segments one pre-token (symbols in mapped form) by applying merges in
  /// rank order. Returns (piece, source byte count) pairs.
  std::vector<std::pair<std::string, std::size_t>> segment(std::string_view bytes,
                                                           bool word_initial) const;

  void save(const std::filesystem::path& vocab_file, const std::filesystem::path& merges_file) const;
  static BpeModel load(const std::filesystem::path& vocab_file,
                       const std::filesystem::path& merges_file);

  friend bool operator==(const BpeModel& a, const BpeModel& b) {
    return a.vocab_ == b.vocab_ && a.merges_ == b.merges_;
  }

 private:
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, int> index_;
  std::vector<std::pair<std::string, std::string>> merges_;
  std::map<std::pair<std::string, std::string>, std::size_t> rank_;
};

/// Printable stand-in for one raw byte (UTF-8 encoded).
const std::string& byte_symbol(unsigned char byte);
/// Inverse of byte_symbol over a concatenation of symbols.
std::string symbols_to_bytes(std::string_view symbols);
/// The word-boundary marker symbol ("Ġ").
const std::string& word_marker();

/// Trains on the lexer's code tokens of every corpus entry; merges never
/// cross code-token boundaries. Sources that fail to lex are skipped.
/// Throws ConfigError when vocab_size cannot hold the base alphabet.
///
/// When `segmentations` is given it receives the final training-time
/// segmentation of every distinct pre-token, keyed by its initial symbol
/// string.
BpeModel train_bpe(const std::vector<std::string>& corpus, std::size_t vocab_size,
                   std::map<std::string, std::vector<std::string>>* segmentations = nullptr);

struct SubTokenSequence {
  std::vector<int> ids;
  std::vector<Span> spans;
  std::vector<int> kinds;  // TokenKind as int, or kNoKind

  std::size_t size() const { return ids.size(); }
  friend bool operator==(const SubTokenSequence&, const SubTokenSequence&) = default;
};

/// [CLS]-prefixed subtokens with byte spans and propagated kinds, truncated
/// to max_seq_len entries.
SubTokenSequence encode(const BpeModel& model, std::string_view source,
                        const std::vector<CodeToken>& code_tokens, std::size_t max_seq_len);

/// Rebuilds source text from subtokens: every byte outside a subtoken span
/// becomes a single space. Equals `normalize_trivia(source)` cut at the last
/// encoded byte.
std::string decode(const BpeModel& model, const SubTokenSequence& seq);

/// Source with every byte outside a code token replaced by ' '.
std::string normalize_trivia(std::string_view source, const std::vector<CodeToken>& code_tokens);

}  // namespace pdlab
