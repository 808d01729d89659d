#include "pdlab/common/error.hpp"
#include "pdlab/dataset/corpus.hpp"
#include "pdlab/tokenizer/bpe.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace pdlab;

namespace {

const std::vector<std::string>& corpus() {
  static const std::vector<std::string> c = gen_synthetic_corpus(31, 120);
  return c;
}

const BpeModel& trained() {
  static const BpeModel m = train_bpe(corpus(), 600);
  return m;
}

SubTokenSequence encode_all(const BpeModel& m, std::string_view src, std::size_t max_len = 1 << 20) {
  return encode(m, src, lex(src), max_len);
}

}  // namespace

TEST(Bpe, FirstMergeIsMostFrequentPair) {
  BpeModel m = train_bpe({"aaab"}, BpeModel::kBaseSize + 1);
  ASSERT_EQ(m.merges().size(), 1u);
  EXPECT_EQ(m.merges()[0], (std::pair<std::string, std::string>{"a", "a"}));
}

TEST(Bpe, RepeatedWordMerge) {
  BpeModel m = train_bpe({"ab ab"}, BpeModel::kBaseSize + 1);
  ASSERT_EQ(m.merges().size(), 1u);
  EXPECT_EQ(m.merges()[0], (std::pair<std::string, std::string>{"a", "b"}));
}

TEST(Bpe, EmptyCorpus) {
  BpeModel m = train_bpe({}, 1000);
  EXPECT_EQ(m.size(), static_cast<std::size_t>(BpeModel::kBaseSize));
  EXPECT_TRUE(m.merges().empty());
}

TEST(Bpe, TooSmallVocabulary) { EXPECT_THROW(train_bpe({"a"}, 100), ConfigError); }

TEST(Bpe, TiesBrokenLexicographically) {
  // "ab" and "cd" occur equally often; ("a","b") sorts first.
  BpeModel m = train_bpe({"cd ab"}, BpeModel::kBaseSize + 1);
  EXPECT_EQ(m.merges()[0], (std::pair<std::string, std::string>{"a", "b"}));
}

TEST(Bpe, SpecialIdsDistinct) {
  const BpeModel& m = trained();
  EXPECT_EQ(m.token(BpeModel::kCls), "[CLS]");
  EXPECT_EQ(m.token(BpeModel::kMask), "[MASK]");
  EXPECT_EQ(m.token(BpeModel::kPad), "[PAD]");
  EXPECT_EQ(m.token(BpeModel::kUnk), "[UNK]");
  EXPECT_EQ(m.id_of(word_marker()), BpeModel::kSpecialCount + 0x20);
}

TEST(Bpe, MergesReproduceTrainingSegmentation) {
  std::map<std::string, std::vector<std::string>> seen;
  BpeModel m = train_bpe(corpus(), 600, &seen);
  ASSERT_FALSE(seen.empty());
  for (const auto& [word, pieces] : seen) {
    const bool initial = word.rfind(word_marker(), 0) == 0;
    std::string bytes = symbols_to_bytes(initial ? word.substr(word_marker().size()) : word);
    std::vector<std::string> got;
    for (auto& [piece, len] : m.segment(bytes, initial)) got.push_back(piece);
    EXPECT_EQ(got, pieces) << word;
  }
}

TEST(Bpe, SaveLoadRoundTrip) {
  auto dir = std::filesystem::temp_directory_path() / "pdlab_bpe_test";
  std::filesystem::create_directories(dir);
  trained().save(dir / "vocab.txt", dir / "merges.txt");
  BpeModel back = BpeModel::load(dir / "vocab.txt", dir / "merges.txt");
  EXPECT_EQ(back, trained());
  std::filesystem::remove_all(dir);
}

TEST(Bpe, LoadRejectsCorruptFiles) {
  auto dir = std::filesystem::temp_directory_path() / "pdlab_bpe_bad";
  std::filesystem::create_directories(dir);
  trained().save(dir / "vocab.txt", dir / "merges.txt");
  { std::ofstream(dir / "merges.txt") << "garbage\n"; }
  EXPECT_THROW(BpeModel::load(dir / "vocab.txt", dir / "merges.txt"), DataError);
  std::filesystem::remove_all(dir);
}

TEST(Encode, EmptySource) {
  auto seq = encode_all(trained(), "");
  EXPECT_EQ(seq.ids, (std::vector<int>{BpeModel::kCls}));
  EXPECT_EQ(seq.spans, (std::vector<Span>{{0, 0}}));
  EXPECT_EQ(seq.kinds, (std::vector<int>{kNoKind}));
}

TEST(Encode, MultiPieceIdentifierTiles) {
  BpeModel m = train_bpe({"temp x_flag"}, BpeModel::kBaseSize + 3);
  auto seq = encode_all(m, "temp_flag");
  ASSERT_GT(seq.size(), 2u);
  std::size_t at = 0;
  for (std::size_t i = 1; i < seq.size(); ++i) {
    EXPECT_EQ(seq.spans[i].begin, at);
    at = seq.spans[i].end;
    EXPECT_EQ(seq.kinds[i], static_cast<int>(TokenKind::Identifier));
  }
  EXPECT_EQ(at, 9u);
}

TEST(Encode, Truncation) {
  const std::string& src = corpus()[0];
  auto full = encode_all(trained(), src);
  ASSERT_GT(full.size(), 20u);
  auto cut = encode_all(trained(), src, 20);
  EXPECT_EQ(cut.size(), 20u);
  EXPECT_TRUE(std::equal(cut.ids.begin(), cut.ids.end(), full.ids.begin()));
}

TEST(Encode, UnknownBytesKeepSpans) {
  BpeModel bare;
  auto seq = encode_all(bare, "s = \"\xC3\xA9\";");
  for (std::size_t i = 1; i < seq.size(); ++i) EXPECT_FALSE(seq.spans[i].empty() && seq.kinds[i] != kNoKind);
}

TEST(Encode, TilingAndKindPropagation) {
  for (const std::string& src : corpus()) {
    auto tokens = lex(src);
    auto seq = encode(trained(), src, tokens, 1 << 20);
    ASSERT_EQ(seq.ids.size(), seq.spans.size());
    ASSERT_EQ(seq.ids.size(), seq.kinds.size());
    std::size_t i = 1;
    for (const CodeToken& t : tokens) {
      std::size_t at = t.span.begin;
      for (; i < seq.size() && (seq.spans[i].empty() || seq.spans[i].begin < t.span.end); ++i) {
        if (seq.spans[i].empty()) {
          EXPECT_EQ(seq.kinds[i], kNoKind);
          continue;
        }
        EXPECT_EQ(seq.spans[i].begin, at);
        at = seq.spans[i].end;
        EXPECT_EQ(seq.kinds[i], static_cast<int>(t.kind));
        EXPECT_EQ(seq.kinds[i] == static_cast<int>(TokenKind::Identifier),
                  t.kind == TokenKind::Identifier);
      }
      EXPECT_EQ(at, t.span.end);
    }
    EXPECT_EQ(i, seq.size());
  }
}

TEST(Encode, Deterministic) {
  for (const std::string& src : corpus()) EXPECT_EQ(encode_all(trained(), src), encode_all(trained(), src));
}

TEST(Decode, RecoversNormalizedSource) {
  for (const std::string& src : corpus()) {
    auto tokens = lex(src);
    auto seq = encode(trained(), src, tokens, 1 << 20);
    EXPECT_EQ(decode(trained(), seq), normalize_trivia(src, tokens).substr(0, tokens.back().span.end));
  }
}

TEST(Decode, RecoversTruncatedPrefix) {
  const std::string src = "int f(int a) {\n  // note\n  int b = a + 1;\n  return b;\n}\n";
  auto tokens = lex(src);
  auto seq = encode(trained(), src, tokens, 8);
  std::string text = decode(trained(), seq);
  EXPECT_EQ(text, normalize_trivia(src, tokens).substr(0, seq.spans.back().end));
}
