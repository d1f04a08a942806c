#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "xmodel/eval/prompt.hpp"
#include "xmodel/eval/tasks.hpp"
#include "xmodel/model/config.hpp"
#include "xmodel/model/params.hpp"
#include "xmodel/tokenizer/tokenizer.hpp"

namespace xmodel::eval {

class LanguageModel {
 public:
  virtual ~LanguageModel() = default;
  virtual std::size_t vocab_size() const = 0;
  virtual std::size_t context_len() const = 0;
  // Log-probabilities of the next token after `context`.
  virtual std::vector<double> next_logprobs(std::span<const int> context) = 0;
  // Sum of log p(continuation[i] | context, continuation[:i]). The default
  // calls next_logprobs once per continuation token.
  virtual double continuation_logprob(std::span<const int> context, std::span<const int> continuation);
};

class Codec {
 public:
  virtual ~Codec() = default;
  virtual std::vector<int> encode(std::string_view text) const = 0;
  virtual std::string decode(std::span<const int> ids) const = 0;
  virtual int bos_id() const = 0;
  virtual int eos_id() const = 0;
};

class TransformerLM : public LanguageModel {
 public:
  TransformerLM(model::ModelParams params, model::ModelConfig config);
  std::size_t vocab_size() const override { return config_.vocab_size; }
  std::size_t context_len() const override { return config_.context_len; }
  std::vector<double> next_logprobs(std::span<const int> context) override;
  double continuation_logprob(std::span<const int> context, std::span<const int> continuation) override;

 private:
  model::ModelParams params_;
  model::ModelConfig config_;
};

class TokenizerCodec : public Codec {
 public:
  explicit TokenizerCodec(const tokenizer::TokenizerModel& tok) : tok_(tok) {}
  std::vector<int> encode(std::string_view text) const override { return tok_.encode(text); }
  std::string decode(std::span<const int> ids) const override { return tok_.decode_text(ids); }
  int bos_id() const override { return tok_.bos_id(); }
  int eos_id() const override { return tok_.eos_id(); }

 private:
  const tokenizer::TokenizerModel& tok_;
};

// [bos] + encode(prompt).
std::vector<int> prompt_ids(const Codec& codec, std::string_view prompt);

// Argmax decoding (ties: lowest id) until eos or max_new_tokens. The eos is
// not returned. Throws if the prompt leaves no room in the context.
std::vector<int> generate_greedy(LanguageModel& lm, const Codec& codec, std::string_view prompt,
                                 std::size_t max_new_tokens = 10);

// Index of the option whose tokens (" " + option) have the highest summed
// log-probability after the prompt. Ties: lowest index.
std::size_t score_loglikelihood(LanguageModel& lm, const Codec& codec, std::string_view prompt,
                                std::span<const std::string> options);

enum class EvalMode { kGenerate, kLoglik };

struct EvalOptions {
  std::size_t n_shots = 3;
  std::uint64_t seed = 0;
  EvalMode mode = EvalMode::kGenerate;
  std::string header = std::string(kDefaultHeader);
  std::optional<std::string> chat_template;
  std::size_t max_new_tokens = 10;
  std::string task_name;
};

struct ItemRecord {
  std::string id;
  std::string category;
  std::string predicted;  // "A".."D" or "unparsed"
  std::string gold;
  bool correct = false;
  std::size_t shots = 0;  // may be below n_shots when the prompt did not fit
  std::string continuation;
};

struct EvalReport {
  std::string task;
  std::string mode;
  std::size_t n_shots = 0;
  std::uint64_t seed = 0;
  std::vector<ItemRecord> items;
  double accuracy = 0.0;
  std::size_t correct = 0;
  std::size_t unparsed = 0;

  nlohmann::json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);
};

// Exemplars for `index`: n distinct other items, drawn with
// Rng::derive(seed, "shots/" + id).
std::vector<std::size_t> sample_fewshot(std::span<const EvalItem> items, std::size_t index, std::size_t n,
                                        std::uint64_t seed);

// Scores every item. When a prompt does not fit the context, exemplars are
// dropped from the end until it does.
EvalReport run_eval(LanguageModel& lm, const Codec& codec, std::span<const EvalItem> items, const EvalOptions& options);

}  // namespace xmodel::eval
