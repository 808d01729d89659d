#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace pdlab {

/// Half-open byte range [begin, end) into a source buffer.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool empty() const { return begin == end; }
  bool contains(const Span& other) const {
    return begin <= other.begin && other.end <= end;
  }
  /// True when the two ranges share at least one byte.
  bool overlaps(const Span& other) const {
    return begin < other.end && other.begin < end;
  }
  friend bool operator==(const Span&, const Span&) = default;
  friend auto operator<=>(const Span&, const Span&) = default;
};

enum class TokenKind : int {
  Identifier = 0,
  Keyword = 1,
  IntLiteral = 2,
  CharLiteral = 3,
  StringLiteral = 4,
  Operator = 5,
  Punctuation = 6,
};

std::string_view to_string(TokenKind kind);

struct CodeToken {
  TokenKind kind;
  std::string text;
  Span span;

  friend bool operator==(const CodeToken&, const CodeToken&) = default;
};

/// Maximal-munch tokenization. Whitespace and comments are skipped but every
/// span stays absolute into `source`. Throws LexError.
std::vector<CodeToken> lex(std::string_view source);

bool is_keyword(std::string_view word);

}  // namespace pdlab
