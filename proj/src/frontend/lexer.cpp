#include "pdlab/common/error.hpp"
#include "pdlab/frontend/token.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace pdlab {

namespace {

constexpr std::array<std::string_view, 32> kKeywords = {
    "auto",   "break",  "case",    "char",   "const",    "continue", "default",
    "do",     "double", "else",    "enum",   "extern",   "float",    "for",
    "goto",   "if",     "int",     "long",   "register", "return",   "short",
    "signed", "sizeof", "static",  "struct", "switch",   "typedef",  "union",
    "unsigned", "void", "volatile", "while"};

// Longest first so the first prefix match is the maximal munch.
constexpr std::array<std::string_view, 38> kOperators = {
    "<<=", ">>=", "...", "->", "++", "--", "<<", ">>", "<=", ">=", "==",
    "!=",  "&&",  "||",  "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=",
    "+",   "-",   "*",   "/",  "%",  "<",  ">",  "=",  "!",  "&",  "|",
    "^",   "~",   "?",   ":",  "."};

constexpr std::string_view kPunctuation = "(){}[];,";

bool is_ident_start(unsigned char c) { return std::isalpha(c) || c == '_'; }
bool is_ident_char(unsigned char c) { return std::isalnum(c) || c == '_'; }

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<CodeToken> run() {
    std::vector<CodeToken> out;
    while (true) {
      skip_trivia();
      if (pos_ >= src_.size()) break;
      out.push_back(next());
    }
    return out;
  }

 private:
  void skip_trivia() {
    while (pos_ < src_.size()) {
      unsigned char c = src_[pos_];
      if (std::isspace(c)) {
        ++pos_;
      } else if (src_.compare(pos_, 2, "//") == 0) {
        while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
      } else if (src_.compare(pos_, 2, "/*") == 0) {
        auto close = src_.find("*/", pos_ + 2);
        if (close == std::string_view::npos) throw LexError(pos_, "unterminated comment");
        pos_ = close + 2;
      } else {
        break;
      }
    }
  }

  CodeToken make(TokenKind kind, std::size_t begin) {
    return CodeToken{kind, std::string(src_.substr(begin, pos_ - begin)), Span{begin, pos_}};
  }

  CodeToken next() {
    const std::size_t begin = pos_;
    const unsigned char c = src_[pos_];
    if (is_ident_start(c)) {
      while (pos_ < src_.size() && is_ident_char(src_[pos_])) ++pos_;
      auto word = src_.substr(begin, pos_ - begin);
      return make(is_keyword(word) ? TokenKind::Keyword : TokenKind::Identifier, begin);
    }
    if (std::isdigit(c)) {
      // pp-number style: digits followed by any run of alphanumerics covers
      // hex prefixes and integer suffixes.
      while (pos_ < src_.size() && is_ident_char(src_[pos_])) ++pos_;
      return make(TokenKind::IntLiteral, begin);
    }
    if (c == '\'' || c == '"') {
      quoted(static_cast<char>(c));
      return make(c == '\'' ? TokenKind::CharLiteral : TokenKind::StringLiteral, begin);
    }
    if (kPunctuation.find(static_cast<char>(c)) != std::string_view::npos) {
      ++pos_;
      return make(TokenKind::Punctuation, begin);
    }
    for (auto op : kOperators) {
      if (src_.compare(pos_, op.size(), op) == 0) {
        pos_ += op.size();
        return make(TokenKind::Operator, begin);
      }
    }
    throw LexError(begin, "unrecognized byte");
  }

  void quoted(char quote) {
    const std::size_t begin = pos_;
    ++pos_;
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '\n') break;
      if (c == '\\') {
        pos_ += 2;
        continue;
      }
      ++pos_;
      if (c == quote) return;
    }
    throw LexError(begin, quote == '"' ? "unterminated string literal"
                                       : "unterminated character literal");
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

}  // namespace

bool is_keyword(std::string_view word) {
  return std::find(kKeywords.begin(), kKeywords.end(), word) != kKeywords.end();
}

std::string_view to_string(TokenKind kind) {
  switch (kind) {
    case TokenKind::Identifier: return "Identifier";
    case TokenKind::Keyword: return "Keyword";
    case TokenKind::IntLiteral: return "IntLiteral";
    case TokenKind::CharLiteral: return "CharLiteral";
    case TokenKind::StringLiteral: return "StringLiteral";
    case TokenKind::Operator: return "Operator";
    case TokenKind::Punctuation: return "Punctuation";
  }
  return "?";
}

std::vector<CodeToken> lex(std::string_view source) { return Lexer(source).run(); }

}  // namespace pdlab
