#include "pdlab/harness/predict.hpp"

#include "pdlab/common/error.hpp"
#include "pdlab/frontend/ast.hpp"

namespace pdlab::harness {

namespace {

bool is(const CodeToken& t, std::string_view text) {
  return (t.kind == TokenKind::Punctuation || t.kind == TokenKind::Operator || t.kind == TokenKind::Keyword) &&
         t.text == text;
}

/// Index of the `)` closing the `(` at `open`, or the last token.
std::size_t matching_paren(const std::vector<CodeToken>& tokens, std::size_t open) {
  int depth = 0;
  for (std::size_t i = open; i < tokens.size(); ++i) {
    if (is(tokens[i], "(")) ++depth;
    if (is(tokens[i], ")") && --depth == 0) return i;
  }
  return tokens.size();
}

/// Position after a leading `type name(params) {` header, or 0.
std::size_t skip_header(const std::vector<CodeToken>& tokens) {
  auto header_word = [](const CodeToken& t) {
    if (t.kind == TokenKind::Identifier) return true;
    if (t.kind != TokenKind::Keyword) return t.text == "*";
    for (const char* k : {"if", "while", "for", "return", "switch", "do", "else", "break", "continue"})
      if (t.text == k) return false;
    return true;
  };
  std::size_t i = 0;
  while (i < tokens.size() && header_word(tokens[i])) ++i;
  if (i < 2 || i >= tokens.size() || !is(tokens[i], "(") || tokens[i - 1].kind != TokenKind::Identifier) return 0;
  const std::size_t close = matching_paren(tokens, i);
  if (close + 1 >= tokens.size() || !is(tokens[close + 1], "{")) return 0;
  return close + 2;
}

}  // namespace

std::vector<PdgNodeSpan> fallback_segments(const std::vector<CodeToken>& tokens) {
  std::vector<PdgNodeSpan> out;
  auto push = [&](PdgNodeKind kind, std::size_t first, std::size_t last) {
    if (first > last || last >= tokens.size()) return;
    out.push_back(PdgNodeSpan{static_cast<int>(out.size()), kind, Span{tokens[first].span.begin, tokens[last].span.end}, kNoNode});
  };
  std::size_t i = skip_header(tokens);
  while (i < tokens.size()) {
    const CodeToken& t = tokens[i];
    if (is(t, "{") || is(t, "}") || is(t, "else") || is(t, "do") || is(t, ";")) {
      ++i;
    } else if ((is(t, "if") || is(t, "while") || is(t, "switch")) && i + 1 < tokens.size() && is(tokens[i + 1], "(")) {
      const std::size_t close = matching_paren(tokens, i + 1);
      push(PdgNodeKind::Predicate, i + 2, std::min(close, tokens.size()) - 1);
      i = close + 1;
    } else if (is(t, "for") && i + 1 < tokens.size() && is(tokens[i + 1], "(")) {
      const std::size_t close = std::min(matching_paren(tokens, i + 1), tokens.size());
      std::size_t start = i + 2;
      int part = 0;
      int depth = 0;
      for (std::size_t k = start; k <= close; ++k) {
        const bool end_of_part = k == close || (depth == 0 && is(tokens[k], ";"));
        if (k < close && is(tokens[k], "(")) ++depth;
        if (k < close && is(tokens[k], ")")) --depth;
        if (!end_of_part) continue;
        if (k > start) push(part == 1 ? PdgNodeKind::Predicate : PdgNodeKind::Statement, start, k - 1);
        ++part;
        start = k + 1;
      }
      i = close + 1;
    } else {
      std::size_t k = i;
      int depth = 0;
      while (k < tokens.size()) {
        if (is(tokens[k], "(")) ++depth;
        if (is(tokens[k], ")")) --depth;
        if (depth <= 0 && is(tokens[k], ";")) break;
        if (depth <= 0 && (is(tokens[k], "{") || is(tokens[k], "}"))) {
          --k;
          break;
        }
        ++k;
      }
      const std::size_t last = std::min(k, tokens.size() - 1);
      push(PdgNodeKind::Statement, i, last);
      i = last + 1;
    }
  }
  return out;
}

InferenceSegmentation segment_for_inference(std::string_view source) {
  InferenceSegmentation seg;
  seg.tokens = lex(source);
  try {
    Ast ast = parse(seg.tokens);
    seg.nodes = segment_statements(ast);
    for (std::size_t i = 0; i < seg.nodes.size(); ++i) seg.nodes[i].index = static_cast<int>(i);
    seg.parsed = true;
  } catch (const ParseError&) {
    seg.nodes = fallback_segments(seg.tokens);
  } catch (const UnsupportedConstruct&) {
    seg.nodes = fallback_segments(seg.tokens);
  }
  return seg;
}

}  // namespace pdlab::harness
