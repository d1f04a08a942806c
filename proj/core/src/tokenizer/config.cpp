#include "xmodel/tokenizer/config.hpp"

#include <fmt/format.h>

#include "xmodel/error.hpp"
#include "xmodel/util/config.hpp"

namespace xmodel::tokenizer {

void TokenizerConfig::validate() const {
  if (!(character_coverage > 0.0 && character_coverage <= 1.0)) {
    throw ConfigError(fmt::format("character_coverage must be in (0, 1], got {}", character_coverage));
  }
  if (!(shrink_factor > 0.0 && shrink_factor < 1.0)) {
    throw ConfigError(fmt::format("shrink_factor must be in (0, 1), got {}", shrink_factor));
  }
  if (max_piece_length < 1) throw ConfigError("max_piece_length must be >= 1");
  if (seed_multiplier < 1.0) throw ConfigError(fmt::format("seed_multiplier must be >= 1, got {}", seed_multiplier));
  if (em_iters_per_round < 1) throw ConfigError("em_iters_per_round must be >= 1");
  if (num_threads < 1) throw ConfigError("num_threads must be >= 1");
  const std::size_t floor = 4 + (byte_fallback ? 256 : 0) + (multispace_tokens >= 2 ? multispace_tokens - 1 : 0);
  if (target_vocab_size <= floor) {
    throw ConfigError(fmt::format("target_vocab_size {} does not exceed the {} reserved tokens", target_vocab_size,
                                  floor));
  }
}

void to_json(nlohmann::json& j, const TokenizerConfig& c) {
  j = nlohmann::json{
      {"target_vocab_size", c.target_vocab_size},
      {"character_coverage", c.character_coverage},
      {"max_piece_length", c.max_piece_length},
      {"seed_multiplier", c.seed_multiplier},
      {"shrink_factor", c.shrink_factor},
      {"em_iters_per_round", c.em_iters_per_round},
      {"split_digits", c.split_digits},
      {"byte_fallback", c.byte_fallback},
      {"remove_extra_whitespace", c.remove_extra_whitespace},
      {"multispace_tokens", c.multispace_tokens},
      {"num_threads", c.num_threads},
  };
}

TokenizerConfig tokenizer_config_from_json(const nlohmann::json& j) {
  TokenizerConfig c;
  config::StrictObject obj(j, "$");
  obj.get("target_vocab_size", c.target_vocab_size);
  obj.get("character_coverage", c.character_coverage);
  obj.get("max_piece_length", c.max_piece_length);
  obj.get("seed_multiplier", c.seed_multiplier);
  obj.get("shrink_factor", c.shrink_factor);
  obj.get("em_iters_per_round", c.em_iters_per_round);
  obj.get("split_digits", c.split_digits);
  obj.get("byte_fallback", c.byte_fallback);
  obj.get("remove_extra_whitespace", c.remove_extra_whitespace);
  obj.get("multispace_tokens", c.multispace_tokens);
  obj.get("num_threads", c.num_threads);
  obj.finish();
  c.validate();
  return c;
}

TokenizerConfig paper_tokenizer_config() { return TokenizerConfig{}; }

}  // namespace xmodel::tokenizer
