#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "xmodel/corpus/ingest.hpp"
#include "xmodel/corpus/mixture.hpp"
#include "xmodel/tokenizer/tokenizer.hpp"
#include "xmodel/util/rng.hpp"

namespace xmodel::corpus {

// Row-major [batch, seq_len] token ids, next-token targets and a {0,1}
// loss mask.
struct TokenBatch {
  std::size_t batch = 0;
  std::size_t seq_len = 0;
  std::vector<int> tokens;
  std::vector<int> targets;
  std::vector<std::uint8_t> loss_mask;
  // Source of each row (pretraining batches only).
  std::vector<std::string> row_sources;

  int token(std::size_t b, std::size_t t) const { return tokens[b * seq_len + t]; }
  int target(std::size_t b, std::size_t t) const { return targets[b * seq_len + t]; }
  std::uint8_t mask(std::size_t b, std::size_t t) const { return loss_mask[b * seq_len + t]; }
  std::size_t mask_sum() const;
  // Rows [begin, begin + count) as their own batch.
  TokenBatch rows(std::size_t begin, std::size_t count) const;
};

// A mixture source: documents already tokenized (without bos/eos).
struct TokenSource {
  std::string name;
  std::vector<std::vector<int>> docs;
};

std::vector<TokenSource> tokenize_sources(const std::vector<Document>& docs,
                                          const tokenizer::TokenizerModel& tokenizer);

// Packs each source as the stream [bos] doc0 [eos] [bos] doc1 [eos] ...
// Every row draws its source from the weights, takes the next seq_len
// tokens of that stream as input and the token after each as target. A
// document cut at the end of a row continues in the next row drawn from the
// same source.
class BatchSampler {
 public:
  BatchSampler(std::vector<TokenSource> sources, int bos_id, int eos_id, std::uint64_t seed,
               bool wrap_around = true);

  TokenBatch sample(const WeightMap& weights, std::size_t batch, std::size_t seq_len);

  // Generator state plus per-source cursors, for checkpoints.
  nlohmann::json state() const;
  void set_state(const nlohmann::json& state);

  const std::vector<TokenSource>& sources() const { return sources_; }

 private:
  struct Cursor {
    std::size_t doc = 0;
    std::size_t pos = 0;  // position in the framed document (0 = bos)
    std::uint64_t epochs = 0;
  };
  std::size_t draw_source(const WeightMap& weights);
  int peek(std::size_t source, Cursor c) const;
  void advance(std::size_t source, Cursor& c) const;

  std::vector<TokenSource> sources_;
  std::vector<Cursor> cursors_;
  int bos_;
  int eos_;
  bool wrap_;
  Rng rng_;
};

struct SftExample {
  std::vector<int> prompt;
  std::vector<int> response;
};

// One row per example: [bos] prompt response [eos], shifted into
// inputs/targets and padded with pad_id. The prompt is cut from the left to
// fit. With loss_on_full_sequence every real target counts; without it
// only targets that are response tokens do.
TokenBatch sft_batch(const std::vector<SftExample>& items, std::size_t seq_len, bool loss_on_full_sequence,
                     int bos_id, int eos_id, int pad_id);

TokenBatch sft_batch(const std::vector<std::pair<std::string, std::string>>& items,
                     const tokenizer::TokenizerModel& tokenizer, std::size_t seq_len, bool loss_on_full_sequence);

}  // namespace xmodel::corpus
