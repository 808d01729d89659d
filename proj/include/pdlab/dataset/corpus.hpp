#pragma once

#include "pdlab/common/rng.hpp"
#include "pdlab/frontend/ast.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace pdlab {

/// Shape limits for generated functions.
struct GeneratorProfile {
  int min_statements = 3;  // PDG nodes per function
  int max_statements = 40;
  int max_depth = 3;       // nesting of if/while/for
  int min_variables = 4;
  int max_variables = 12;
};

/// Grammar-directed random functions over the supported subset. Every
/// output parses and analyzes; identical seeds give identical bytes.
std::vector<std::string> gen_synthetic_corpus(std::uint64_t seed, std::size_t n_functions,
                                              const GeneratorProfile& profile = {});

/// Canonical rendering: one statement per line, four-space indentation,
/// braces around every body, minimal parentheses.
std::string pretty_print(const Ast& ast);

/// Whitespace runs collapsed to one space, ends trimmed.
std::string normalize_whitespace(std::string_view source);

/// Hex SHA-256 of the whitespace-normalized source.
std::string content_hash(std::string_view source);

struct CorpusSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> valid;
  std::vector<std::size_t> test;
  /// content hash -> index of the representative kept for it
  std::map<std::string, std::size_t> registry;
};

/// Exact-match dedup on the normalized hash, then a seeded shuffle cut into
/// (train, valid, test) by `ratios`. Throws ConfigError unless the ratios are
/// nonnegative and sum to 1.
CorpusSplit dedup_and_split(const std::vector<std::string>& corpus,
                            const std::array<double, 3>& ratios, std::uint64_t seed);


}  // namespace pdlab
