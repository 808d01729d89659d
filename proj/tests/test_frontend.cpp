#include "pdlab/common/error.hpp"
#include "pdlab/dataset/corpus.hpp"
#include "pdlab/frontend/ast.hpp"
#include "pdlab/frontend/token.hpp"

#include <gtest/gtest.h>

using namespace pdlab;

namespace {

Ast parse_source(std::string_view src) { return parse(lex(src)); }

std::string text_of(std::string_view src, Span s) { return std::string(src.substr(s.begin, s.size())); }

}  // namespace

TEST(Lexer, DeclarationTokens) {
  auto t = lex("int a;");
  ASSERT_EQ(t.size(), 3u);
  EXPECT_EQ(t[0].kind, TokenKind::Keyword);
  EXPECT_EQ(t[0].text, "int");
  EXPECT_EQ(t[0].span, (Span{0, 3}));
  EXPECT_EQ(t[1].kind, TokenKind::Identifier);
  EXPECT_EQ(t[1].span, (Span{4, 5}));
  EXPECT_EQ(t[2].kind, TokenKind::Punctuation);
  EXPECT_EQ(t[2].span, (Span{5, 6}));
}

TEST(Lexer, EmptyInput) { EXPECT_TRUE(lex("").empty()); }

TEST(Lexer, MaximalMunchAndComments) {
  auto t = lex("x += y2; /*c*/");
  ASSERT_EQ(t.size(), 4u);
  EXPECT_EQ(t[1].kind, TokenKind::Operator);
  EXPECT_EQ(t[1].text, "+=");
  std::vector<Span> spans{{0, 1}, {2, 4}, {5, 7}, {7, 8}};
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(t[i].span, spans[i]);
}

TEST(Lexer, Literals) {
  auto t = lex("c = 'x'; s = \"a\\\"b\"; n = 42;");
  EXPECT_EQ(t[2].kind, TokenKind::CharLiteral);
  EXPECT_EQ(t[6].kind, TokenKind::StringLiteral);
  EXPECT_EQ(t[6].text, "\"a\\\"b\"");
  EXPECT_EQ(t[10].kind, TokenKind::IntLiteral);
}

TEST(Lexer, Errors) {
  EXPECT_THROW(lex("a = 1; /* open"), LexError);
  EXPECT_THROW(lex("s = \"abc"), LexError);
  try {
    lex("a = b @ c;");
    FAIL();
  } catch (const LexError& e) {
    EXPECT_EQ(e.position(), 6u);
  }
}

TEST(Lexer, SpansReconstructSource) {
  for (const std::string& src : gen_synthetic_corpus(3, 50)) {
    std::size_t prev_end = 0;
    for (const CodeToken& t : lex(src)) {
      EXPECT_FALSE(t.span.empty());
      EXPECT_GE(t.span.begin, prev_end);
      EXPECT_EQ(text_of(src, t.span), t.text);
      for (std::size_t i = prev_end; i < t.span.begin; ++i)
        EXPECT_TRUE(std::isspace(static_cast<unsigned char>(src[i])));
      prev_end = t.span.end;
    }
  }
}

TEST(Parser, DeclarationChain) {
  Ast ast = parse_source("void f() { int a = 1; }");
  const AstNode& fn = ast[ast.root];
  EXPECT_EQ(fn.kind, NodeKind::Function);
  const AstNode& body = ast[fn.children.back()];
  ASSERT_EQ(body.kind, NodeKind::Block);
  ASSERT_EQ(body.children.size(), 1u);
  const AstNode& decl = ast[body.children[0]];
  EXPECT_EQ(decl.kind, NodeKind::Decl);
  ASSERT_EQ(decl.children.size(), 2u);
  EXPECT_EQ(ast[decl.children[0]].text, "a");
  EXPECT_EQ(ast[decl.children[1]].kind, NodeKind::Literal);
  EXPECT_EQ(ast[decl.children[1]].text, "1");
}

TEST(Parser, IfShape) {
  Ast ast = parse_source("void f() { if (a > 0) { b = 1; } }");
  const AstNode& stmt = ast[ast[ast[ast.root].children.back()].children[0]];
  ASSERT_EQ(stmt.kind, NodeKind::If);
  ASSERT_EQ(stmt.children.size(), 2u);
  EXPECT_EQ(ast[stmt.children[0]].kind, NodeKind::BinaryOp);
  EXPECT_EQ(ast[stmt.children[0]].text, ">");
  const AstNode& block = ast[stmt.children[1]];
  ASSERT_EQ(block.kind, NodeKind::Block);
  EXPECT_EQ(ast[ast[block.children[0]].children[0]].kind, NodeKind::Assign);
}

TEST(Parser, MissingExpressionPosition) {
  const std::string src = "void f() { x = ; }";
  try {
    parse_source(src);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.position(), src.find(';'));
  }
}

TEST(Parser, Precedence) {
  Ast ast = parse_source("int f() { return a + b * c < d || !e && f; }");
  const AstNode& ret = ast[ast[ast[ast.root].children.back()].children[0]];
  const AstNode& top = ast[ret.children[0]];
  EXPECT_EQ(top.text, "||");
  EXPECT_EQ(ast[top.children[0]].text, "<");
  EXPECT_EQ(ast[ast[top.children[0]].children[0]].text, "+");
  EXPECT_EQ(ast[top.children[1]].text, "&&");
}

TEST(Parser, UnsupportedConstructs) {
  const char* cases[] = {
      "void f() { goto end; }",
      "void f() { switch (a) { } }",
      "void f() { a = b ? c : d; }",
      "void f() { int *p; }",
      "void f() { a = &b; }",
      "void f() { a++; }",
      "void f() { a = b & c; }",
      "void f() { do { a = 1; } while (a); }",
      "void f() { int a, b; }",
      "void f() { long a; }",
      "void f() { a %= 2; }",
  };
  for (const char* src : cases) EXPECT_THROW(parse_source(src), UnsupportedConstruct) << src;
}

TEST(Parser, BreakOutsideLoop) {
  EXPECT_THROW(parse_source("void f() { break; }"), ParseError);
  EXPECT_NO_THROW(parse_source("void f() { while (a) { if (b) { break; } continue; } }"));
}

TEST(Parser, ChildSpansNested) {
  for (const std::string& src : gen_synthetic_corpus(4, 40)) {
    std::vector<CodeToken> tokens = lex(src);
    Ast ast = parse(tokens);
    for (const AstNode& n : ast.nodes) {
      for (NodeId c : n.children) {
        EXPECT_LE(n.span.begin, ast[c].span.begin);
        EXPECT_GE(n.span.end, ast[c].span.end);
      }
      if (n.kind == NodeKind::IdentifierRef) {
        auto it = std::find_if(tokens.begin(), tokens.end(), [&](const CodeToken& t) { return t.span == n.span; });
        ASSERT_NE(it, tokens.end());
        EXPECT_EQ(it->kind, TokenKind::Identifier);
      }
    }
  }
}

TEST(Segmentation, Sequential) {
  const std::string src = "void f() { a = 1; b = 2; }";
  auto nodes = segment_statements(parse_source(src));
  ASSERT_EQ(nodes.size(), 2u);
  EXPECT_EQ(text_of(src, nodes[0].span), "a = 1;");
  EXPECT_EQ(text_of(src, nodes[1].span), "b = 2;");
  EXPECT_EQ(nodes[1].index, 1);
}

TEST(Segmentation, PredicateCoversCondition) {
  const std::string src = "void f() { if (a > 0) { b = 1; } }";
  auto nodes = segment_statements(parse_source(src));
  ASSERT_EQ(nodes.size(), 2u);
  EXPECT_EQ(nodes[0].kind, PdgNodeKind::Predicate);
  EXPECT_EQ(text_of(src, nodes[0].span), "a > 0");
  EXPECT_EQ(text_of(src, nodes[1].span), "b = 1;");
}

TEST(Segmentation, ForDecomposition) {
  const std::string src = "void f() { for (i = 0; i < n; i = i + 1) { s = s + i; } }";
  auto nodes = segment_statements(parse_source(src));
  ASSERT_EQ(nodes.size(), 4u);
  EXPECT_EQ(text_of(src, nodes[0].span), "i = 0");
  EXPECT_EQ(text_of(src, nodes[1].span), "i < n");
  EXPECT_EQ(nodes[1].kind, PdgNodeKind::Predicate);
  EXPECT_EQ(text_of(src, nodes[2].span), "i = i + 1");
  EXPECT_EQ(text_of(src, nodes[3].span), "s = s + i;");
}

TEST(Segmentation, ElseAddsNoNode) {
  auto nodes = segment_statements(parse_source("void f() { if (a) { b = 1; } else { c = 2; } }"));
  ASSERT_EQ(nodes.size(), 3u);
  EXPECT_EQ(nodes[2].kind, PdgNodeKind::Statement);
}

TEST(Segmentation, NodesDenseAndDisjoint) {
  for (const std::string& src : gen_synthetic_corpus(5, 60)) {
    Ast ast = parse_source(src);
    auto nodes = segment_statements(ast);
    const Span fn = ast[ast.root].span;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      EXPECT_EQ(nodes[i].index, static_cast<int>(i));
      EXPECT_TRUE(fn.begin <= nodes[i].span.begin && nodes[i].span.end <= fn.end);
      if (i) EXPECT_LE(nodes[i - 1].span.end, nodes[i].span.begin);
    }
  }
}

TEST(PrettyPrint, RoundTripIsStructurallyEqual) {
  for (const std::string& src : gen_synthetic_corpus(11, 200)) {
    Ast ast = parse_source(src);
    const std::string again = pretty_print(ast);
    EXPECT_TRUE(structurally_equal(ast, parse_source(again)));
    EXPECT_EQ(again, src);
  }
}

TEST(PrettyPrint, HandWrittenInput) {
  const std::string src = "int g(int a){int b=-(-a);if(a>0)b=a*(b+1);else if(b)b=2;while(b){b-=1;}return b;}";
  Ast ast = parse_source(src);
  EXPECT_TRUE(structurally_equal(ast, parse_source(pretty_print(ast))));
}
