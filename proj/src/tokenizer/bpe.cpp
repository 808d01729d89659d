#include "pdlab/tokenizer/bpe.hpp"

#include "pdlab/common/error.hpp"

#include <array>
#include <fstream>
#include <limits>

#include <spdlog/spdlog.h>

namespace pdlab {

namespace {

std::string utf8(unsigned code) {
  std::string out;
  if (code < 0x80) {
    out += static_cast<char>(code);
  } else {
    out += static_cast<char>(0xC0 | (code >> 6));
    out += static_cast<char>(0x80 | (code & 0x3F));
  }
  return out;
}

struct ByteTable {
  std::array<std::string, 256> symbol;
  std::unordered_map<std::string, unsigned char> byte;

  ByteTable() {
    unsigned extra = 0;
    for (unsigned b = 0; b < 256; ++b) {
      bool printable = (b >= '!' && b <= '~') || (b >= 0xA1 && b <= 0xAC) || (b >= 0xAE);
      symbol[b] = utf8(printable ? b : 256 + extra++);
      byte[symbol[b]] = static_cast<unsigned char>(b);
    }
  }
};

const ByteTable& table() {
  static const ByteTable t;
  return t;
}

// Splits a mapped string into its per-byte symbols (1 or 2 UTF-8 bytes each).
std::vector<std::string> split_symbols(std::string_view s) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < s.size();) {
    std::size_t len = (static_cast<unsigned char>(s[i]) & 0x80) ? 2 : 1;
    out.emplace_back(s.substr(i, len));
    i += len;
  }
  return out;
}

constexpr std::array<const char*, 4> kSpecialNames = {"[CLS]", "[MASK]", "[PAD]", "[UNK]"};
constexpr std::string_view kMergesHeader = "#version: pdlab-bpe 1";

struct PreToken {
  std::string bytes;
  bool word_initial;
};

// Code tokens with whether trivia (whitespace or comments) precedes them.
std::vector<PreToken> pre_tokenize(const std::vector<CodeToken>& tokens) {
  std::vector<PreToken> out;
  std::size_t prev_end = 0;
  for (const CodeToken& t : tokens) {
    out.push_back({t.text, t.span.begin > prev_end});
    prev_end = t.span.end;
  }
  return out;
}

std::vector<std::string> initial_symbols(std::string_view bytes, bool word_initial) {
  std::vector<std::string> syms;
  if (word_initial) syms.push_back(word_marker());
  for (char c : bytes) syms.push_back(byte_symbol(static_cast<unsigned char>(c)));
  return syms;
}

}  // namespace

const std::string& byte_symbol(unsigned char byte) { return table().symbol[byte]; }

const std::string& word_marker() { return byte_symbol(' '); }

std::string symbols_to_bytes(std::string_view symbols) {
  std::string out;
  for (const std::string& s : split_symbols(symbols)) {
    auto it = table().byte.find(s);
    if (it != table().byte.end()) out += static_cast<char>(it->second);
  }
  return out;
}

BpeModel::BpeModel() {
  for (const char* name : kSpecialNames) {
    index_[name] = static_cast<int>(vocab_.size());
    vocab_.emplace_back(name);
  }
  for (unsigned b = 0; b < 256; ++b) {
    index_[byte_symbol(static_cast<unsigned char>(b))] = static_cast<int>(vocab_.size());
    vocab_.push_back(byte_symbol(static_cast<unsigned char>(b)));
  }
}

int BpeModel::id_of(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

void BpeModel::add_merge(const std::string& left, const std::string& right) {
  rank_.emplace(std::make_pair(left, right), merges_.size());
  merges_.emplace_back(left, right);
  std::string joined = left + right;
  if (!index_.contains(joined)) {
    index_[joined] = static_cast<int>(vocab_.size());
    vocab_.push_back(std::move(joined));
  }
}

std::vector<std::pair<std::string, std::size_t>> BpeModel::segment(std::string_view bytes,
                                                                   bool word_initial) const {
  std::vector<std::string> syms = initial_symbols(bytes, word_initial);
  std::vector<std::size_t> lens(syms.size(), 1);
  if (word_initial) lens[0] = 0;
  while (syms.size() > 1) {
    std::size_t best_rank = std::numeric_limits<std::size_t>::max();
    for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
      auto it = rank_.find({syms[i], syms[i + 1]});
      if (it != rank_.end() && it->second < best_rank) best_rank = it->second;
    }
    if (best_rank == std::numeric_limits<std::size_t>::max()) break;
    const auto& [left, right] = merges_[best_rank];
    std::vector<std::string> next_syms;
    std::vector<std::size_t> next_lens;
    for (std::size_t i = 0; i < syms.size();) {
      if (i + 1 < syms.size() && syms[i] == left && syms[i + 1] == right) {
        next_syms.push_back(left + right);
        next_lens.push_back(lens[i] + lens[i + 1]);
        i += 2;
      } else {
        next_syms.push_back(std::move(syms[i]));
        next_lens.push_back(lens[i]);
        ++i;
      }
    }
    syms = std::move(next_syms);
    lens = std::move(next_lens);
  }
  std::vector<std::pair<std::string, std::size_t>> out;
  out.reserve(syms.size());
  for (std::size_t i = 0; i < syms.size(); ++i) out.emplace_back(std::move(syms[i]), lens[i]);
  return out;
}

void BpeModel::save(const std::filesystem::path& vocab_file,
                    const std::filesystem::path& merges_file) const {
  std::ofstream v(vocab_file, std::ios::binary);
  if (!v) throw DataError("cannot write " + vocab_file.string());
  for (const std::string& tok : vocab_) v << tok << '\n';
  std::ofstream m(merges_file, std::ios::binary);
  if (!m) throw DataError("cannot write " + merges_file.string());
  m << kMergesHeader << '\n';
  for (const auto& [l, r] : merges_) m << l << ' ' << r << '\n';
}

BpeModel BpeModel::load(const std::filesystem::path& vocab_file,
                        const std::filesystem::path& merges_file) {
  std::ifstream v(vocab_file, std::ios::binary);
  if (!v) throw DataError("cannot read " + vocab_file.string());
  std::vector<std::string> vocab;
  for (std::string line; std::getline(v, line);) vocab.push_back(line);

  BpeModel model;
  if (vocab.size() < static_cast<std::size_t>(kBaseSize))
    throw DataError("vocabulary file shorter than the base alphabet");
  for (std::size_t i = 0; i < static_cast<std::size_t>(kBaseSize); ++i)
    if (vocab[i] != model.vocab_[i]) throw DataError("vocabulary base alphabet mismatch at line " + std::to_string(i + 1));

  std::ifstream m(merges_file, std::ios::binary);
  if (!m) throw DataError("cannot read " + merges_file.string());
  std::string line;
  if (!std::getline(m, line) || line != kMergesHeader) throw DataError("bad merges header");
  while (std::getline(m, line)) {
    auto sp = line.find(' ');
    if (sp == std::string::npos) throw DataError("bad merge line: " + line);
    model.add_merge(line.substr(0, sp), line.substr(sp + 1));
  }
  if (model.vocab_ != vocab) throw DataError("vocabulary does not match merges");
  return model;
}

BpeModel train_bpe(const std::vector<std::string>& corpus, std::size_t vocab_size,
                   std::map<std::string, std::vector<std::string>>* segmentations) {
  if (vocab_size < static_cast<std::size_t>(BpeModel::kBaseSize))
    throw ConfigError("vocab_size " + std::to_string(vocab_size) + " below base alphabet of " +
                      std::to_string(BpeModel::kBaseSize));
  // Keyed by current segmentation; `origin` remembers the initial spelling.
  std::map<std::vector<std::string>, long> words;
  std::map<std::vector<std::string>, std::string> origin;
  for (const std::string& src : corpus) {
    std::vector<CodeToken> tokens;
    try {
      tokens = lex(src);
    } catch (const LexError& e) {
      spdlog::warn("train_bpe: skipping corpus entry: {}", e.what());
      continue;
    }
    for (const PreToken& p : pre_tokenize(tokens)) {
      auto syms = initial_symbols(p.bytes, p.word_initial);
      if (segmentations && !origin.contains(syms)) {
        std::string key;
        for (const auto& s : syms) key += s;
        origin[syms] = key;
      }
      ++words[std::move(syms)];
    }
  }

  BpeModel model;
  while (model.size() < vocab_size) {
    std::map<std::pair<std::string, std::string>, long> pairs;
    for (const auto& [syms, count] : words)
      for (std::size_t i = 0; i + 1 < syms.size(); ++i) pairs[{syms[i], syms[i + 1]}] += count;
    if (pairs.empty()) break;
    // Highest count wins; the map's ascending order breaks ties
    // lexicographically.
    auto best = pairs.begin();
    for (auto it = pairs.begin(); it != pairs.end(); ++it)
      if (it->second > best->second) best = it;
    const auto [left, right] = best->first;
    model.add_merge(left, right);

    std::map<std::vector<std::string>, long> next;
    std::map<std::vector<std::string>, std::string> next_origin;
    for (auto& [syms, count] : words) {
      std::vector<std::string> merged;
      for (std::size_t i = 0; i < syms.size();) {
        if (i + 1 < syms.size() && syms[i] == left && syms[i + 1] == right) {
          merged.push_back(left + right);
          i += 2;
        } else {
          merged.push_back(syms[i++]);
        }
      }
      if (segmentations) next_origin[merged] = origin[syms];
      next[std::move(merged)] += count;
    }
    words = std::move(next);
    origin = std::move(next_origin);
  }
  if (segmentations)
    for (const auto& [syms, key] : origin) (*segmentations)[key] = syms;
  return model;
}

SubTokenSequence encode(const BpeModel& model, std::string_view source,
                        const std::vector<CodeToken>& code_tokens, std::size_t max_seq_len) {
  (void)source;
  SubTokenSequence seq;
  if (max_seq_len == 0) return seq;
  seq.ids.push_back(BpeModel::kCls);
  seq.spans.push_back(Span{0, 0});
  seq.kinds.push_back(kNoKind);
  std::size_t prev_end = 0;
  for (const CodeToken& tok : code_tokens) {
    const bool word_initial = tok.span.begin > prev_end;
    prev_end = tok.span.end;
    std::size_t offset = tok.span.begin;
    for (auto& [piece, len] : model.segment(tok.text, word_initial)) {
      if (seq.ids.size() >= max_seq_len) return seq;
      seq.ids.push_back(model.id_of(piece));
      seq.spans.push_back(Span{offset, offset + len});
      seq.kinds.push_back(len == 0 ? kNoKind : static_cast<int>(tok.kind));
      offset += len;
    }
  }
  return seq;
}

std::string decode(const BpeModel& model, const SubTokenSequence& seq) {
  std::string out;
  for (std::size_t i = 1; i < seq.ids.size(); ++i) {
    const Span& s = seq.spans[i];
    if (s.empty()) continue;
    std::string bytes = symbols_to_bytes(model.token(seq.ids[i]));
    if (seq.ids[i] == BpeModel::kUnk) bytes.assign(s.size(), '?');
    if (bytes.size() == s.size() + 1) bytes.erase(0, 1);  // word-boundary marker
    if (out.size() < s.begin) out.resize(s.begin, ' ');
    out.resize(s.begin);
    out += bytes;
  }
  return out;
}

std::string normalize_trivia(std::string_view source, const std::vector<CodeToken>& code_tokens) {
  std::string out(source.size(), ' ');
  for (const CodeToken& t : code_tokens)
    for (std::size_t i = t.span.begin; i < t.span.end; ++i) out[i] = source[i];
  return out;
}

}  // namespace pdlab
