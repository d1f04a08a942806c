#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xmodel/tokenizer/config.hpp"
#include "xmodel/tokenizer/trainer.hpp"
#include "xmodel/tokenizer/vocab.hpp"

namespace xmodel::tokenizer {

// Reference compression rates (tokens per character) reported for other
// tokenizers on the authors' private benchmark corpus. Not reproducible
// here; kept for the compress-bench report.
struct CompressionReference {
  std::string_view name;
  std::size_t vocab_size;
  double rate;
};
inline constexpr CompressionReference kCompressionReferences[] = {
    {"LLaMA 3", 128000, 0.3823},     {"LLaMA 2", 32000, 0.7524},   {"InternLM 2", 103168, 0.4124},
    {"Baichuan 2", 125696, 0.4103}, {"Xmodel-1.5", 65280, 0.3800},
};

struct DecodeResult {
  std::string text;
  // A run of byte tokens did not form valid UTF-8; U+FFFD was substituted.
  bool invalid_bytes = false;
};

enum class CompressionUnit { kCharacters, kBytes };

class TokenizerModel {
 public:
  TokenizerModel() = default;
  TokenizerModel(TokenizerConfig config, UnigramVocab vocab);

  static TokenizerModel train(const std::vector<std::string>& documents, const TokenizerConfig& config,
                              TrainingTrace* trace = nullptr);

  const TokenizerConfig& config() const { return config_; }
  const UnigramVocab& vocab() const { return vocab_; }
  std::size_t vocab_size() const { return vocab_.size(); }

  int bos_id() const { return UnigramVocab::kBosId; }
  int eos_id() const { return UnigramVocab::kEosId; }
  int pad_id() const { return UnigramVocab::kPadId; }

  // Viterbi per pretoken; characters outside the vocab become their UTF-8
  // bytes (or <unk> without byte fallback). Deterministic and thread-safe.
  std::vector<int> encode(std::string_view text) const;
  // Throws xmodel::Error for an out-of-range id. Control tokens decode to "".
  DecodeResult decode(std::span<const int> ids) const;
  std::string decode_text(std::span<const int> ids) const { return decode(ids).text; }

  // Vocab file: one JSON header line, then "piece<TAB>logprob" per id.
  void save(const std::filesystem::path& path) const;
  static TokenizerModel load(const std::filesystem::path& path);
  std::string serialize() const;
  static TokenizerModel deserialize(std::string_view contents);

 private:
  void encode_pretoken(std::string_view pretoken, std::vector<int>& out) const;

  TokenizerConfig config_;
  UnigramVocab vocab_;
  std::vector<int> space_run_ids_;  // index k -> id of the k-space piece, or -1
};

// Total tokens / total characters (or UTF-8 bytes) over the corpus. Lower
// is better; plain character-level tokenization scores exactly 1.0.
double compression_rate(const TokenizerModel& model, const std::vector<std::string>& corpus,
                        CompressionUnit unit = CompressionUnit::kCharacters);

}  // namespace xmodel::tokenizer
