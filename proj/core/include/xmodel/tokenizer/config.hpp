#pragma once

#include <cstddef>

#include <nlohmann/json.hpp>

namespace xmodel::tokenizer {

struct TokenizerConfig {
  std::size_t target_vocab_size = 65280;
  // Fraction of corpus character mass that must be covered by
  // single-character pieces; the rest is reachable only through bytes.
  double character_coverage = 0.9999;
  // In Unicode characters.
  std::size_t max_piece_length = 16;
  // Seed vocabulary size = seed_multiplier * target_vocab_size.
  double seed_multiplier = 4.0;
  double shrink_factor = 0.75;
  int em_iters_per_round = 2;
  bool split_digits = true;
  bool byte_fallback = true;
  bool remove_extra_whitespace = false;
  // Longest run of spaces that gets a dedicated piece (pieces for 2..N
  // spaces are injected). 0 disables.
  std::size_t multispace_tokens = 4;
  // E-step fan-out. Results are bit-identical for any value.
  std::size_t num_threads = 1;

  // Throws ConfigError on invariant violations.
  void validate() const;
};

void to_json(nlohmann::json& j, const TokenizerConfig& c);
// Strict: unknown keys and type mismatches throw ConfigError.
TokenizerConfig tokenizer_config_from_json(const nlohmann::json& j);

// Settings used for the released tokenizer: 65,280 pieces, 0.9999 character
// coverage, max piece length 16, byte fallback, digit splitting, extra
// whitespace preserved, multi-space pieces.
TokenizerConfig paper_tokenizer_config();

}  // namespace xmodel::tokenizer
