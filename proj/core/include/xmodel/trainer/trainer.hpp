#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "xmodel/corpus/batching.hpp"
#include "xmodel/corpus/mixture.hpp"
#include "xmodel/model/config.hpp"
#include "xmodel/model/params.hpp"
#include "xmodel/tensor/tensor.hpp"
#include "xmodel/trainer/checkpoint.hpp"
#include "xmodel/trainer/optimizer.hpp"
#include "xmodel/trainer/schedule.hpp"

namespace xmodel::trainer {

struct TrainConfig {
  std::size_t micro_batch = 4;
  std::size_t accum_steps = 30;
  // Data-parallel workers are accounted for, not run.
  std::size_t workers = 1;
  std::size_t seq_len = 4096;
  double weight_decay = 0.1;
  double clip_norm = 1.0;
  double beta1 = 0.9;
  double beta2 = 0.95;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  tensor::Precision precision = tensor::Precision::kFloat64;
  LRSchedule lr;
  // Loop settings (0 disables).
  std::int64_t eval_interval = 0;
  std::size_t eval_batches = 4;
  std::int64_t checkpoint_interval = 0;
  // Stop once the train loss falls below this.
  double stop_loss = 0.0;
  bool wrap_around = true;

  TrainConfig() = default;
  TrainConfig(std::size_t micro_batch_, std::size_t accum_steps_, std::size_t workers_, std::size_t seq_len_)
      : micro_batch(micro_batch_), accum_steps(accum_steps_), workers(workers_), seq_len(seq_len_) {}

  std::uint64_t global_batch() const { return std::uint64_t{micro_batch} * accum_steps * workers; }
  std::uint64_t tokens_per_iter() const { return global_batch() * seq_len; }
  AdamWConfig adamw() const { return {beta1, beta2, adam_eps, weight_decay}; }
  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);

// Fine-tuning preset: peak lr 6e-5, weight decay 0.1, warmup 3% of
// total_steps, cosine decay and no exponential tail.
TrainConfig sft_preset(std::int64_t total_steps);

struct TrainState {
  model::ModelConfig model_config;
  TrainConfig train_config;
  model::ModelParams params;
  AdamW optimizer;
  std::int64_t step = 0;
  std::uint64_t tokens_seen = 0;

  TrainState() = default;
  TrainState(model::ModelConfig mc, TrainConfig tc, model::ModelParams p);
};

struct StepMetrics {
  std::int64_t step = 0;  // steps completed after this one
  double lr = 0.0;
  double train_loss = 0.0;
  double grad_norm = 0.0;
  std::uint64_t tokens_seen = 0;
  std::optional<double> val_loss;
};

// Sums gradients of loss/accum_steps over exactly accum_steps micro-batches,
// clips, then takes one AdamW step at lr_at(step).
StepMetrics train_step(TrainState& state, std::span<const corpus::TokenBatch> micro_batches);

// Mean of the per-batch masked losses; no tape, params untouched.
double validate(const model::ModelParams& params, const model::ModelConfig& config,
                std::span<const corpus::TokenBatch> valset);

// CSV with header step,lr,train_loss,val_loss,grad_norm,tokens_seen.
// Numbers use shortest round-trip formatting.
class MetricsWriter {
 public:
  explicit MetricsWriter(const std::filesystem::path& path, bool append = false);
  void write(const StepMetrics& m);
  static std::string header();
  static std::string format(const StepMetrics& m);

 private:
  std::ofstream out_;
};

// Parameters, Adam moments, counters and both configs; `extra` is merged
// into the metadata.
CheckpointFile to_checkpoint(const TrainState& state, const nlohmann::json& extra = nlohmann::json::object());

struct LoadedModel {
  model::ModelConfig config;
  model::ModelParams params;
  nlohmann::json metadata;
};
// Parameters only (any checkpoint written by to_checkpoint).
LoadedModel load_model(const std::filesystem::path& path);

// Fine-tuning over prompt/response pairs. Each step takes the next
// micro_batch * accum_steps examples of a seeded shuffle (reshuffled every
// epoch) and runs train_step on them. Runs until lr.total_steps.
std::vector<StepMetrics> run_sft(TrainState& state, const std::vector<corpus::SftExample>& examples,
                                 bool loss_on_full_sequence, int bos_id, int eos_id, int pad_id,
                                 MetricsWriter* metrics = nullptr);

// Pretraining loop over a mixture sampler.
class Trainer {
 public:
  Trainer(TrainState state, corpus::BatchSampler sampler, corpus::MixtureSchedule mixture,
          std::vector<corpus::TokenBatch> valset);

  StepMetrics step();
  // Runs until `until_step` (or total_steps, or stop_loss). Returns the
  // metrics of every step taken.
  std::vector<StepMetrics> run(std::int64_t until_step, MetricsWriter* metrics = nullptr,
                               const std::filesystem::path& checkpoint_dir = {});

  void save(const std::filesystem::path& path) const;
  // Restores params, optimizer, counters and sampler state. The checkpoint
  // must have been written with the same model and train configs.
  void load(const std::filesystem::path& path);

  const TrainState& state() const { return state_; }
  TrainState& state() { return state_; }
  const corpus::BatchSampler& sampler() const { return sampler_; }

 private:
  TrainState state_;
  corpus::BatchSampler sampler_;
  corpus::MixtureSchedule mixture_;
  std::vector<corpus::TokenBatch> valset_;
};

}  // namespace xmodel::trainer
