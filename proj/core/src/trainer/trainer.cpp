#include "xmodel/trainer/trainer.hpp"

#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "xmodel/error.hpp"
#include "xmodel/model/transformer.hpp"
#include "xmodel/tensor/autograd.hpp"
#include "xmodel/tensor/ops.hpp"
#include "xmodel/trainer/checkpoint.hpp"
#include "xmodel/util/config.hpp"
#include "xmodel/util/log.hpp"
#include "xmodel/util/rng.hpp"

namespace xmodel::trainer {

using corpus::TokenBatch;

void TrainConfig::validate() const {
  if (micro_batch == 0 || accum_steps == 0 || workers == 0 || seq_len == 0) {
    throw ConfigError("train config: micro_batch, accum_steps, workers and seq_len must be positive");
  }
  if (!(clip_norm > 0.0)) throw ConfigError("train config: clip_norm must be positive");
  if (weight_decay < 0.0) throw ConfigError("train config: weight_decay must be non-negative");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("train config: betas must be in [0, 1)");
  if (!(adam_eps > 0.0)) throw ConfigError("train config: adam_eps must be positive");
  if (eval_interval < 0 || checkpoint_interval < 0) throw ConfigError("train config: intervals must be non-negative");
  lr.validate();
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"micro_batch", c.micro_batch},
       {"accum_steps", c.accum_steps},
       {"workers", c.workers},
       {"seq_len", c.seq_len},
       {"weight_decay", c.weight_decay},
       {"clip_norm", c.clip_norm},
       {"beta1", c.beta1},
       {"beta2", c.beta2},
       {"adam_eps", c.adam_eps},
       {"seed", c.seed},
       {"precision", c.precision == tensor::Precision::kFloat32 ? "f32" : "f64"},
       {"lr", c.lr},
       {"eval_interval", c.eval_interval},
       {"eval_batches", c.eval_batches},
       {"checkpoint_interval", c.checkpoint_interval},
       {"stop_loss", c.stop_loss},
       {"wrap_around", c.wrap_around}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  config::StrictObject obj(j, "$");
  TrainConfig c;
  obj.get("micro_batch", c.micro_batch);
  obj.get("accum_steps", c.accum_steps);
  obj.get("workers", c.workers);
  obj.get("seq_len", c.seq_len);
  obj.get("weight_decay", c.weight_decay);
  obj.get("clip_norm", c.clip_norm);
  obj.get("beta1", c.beta1);
  obj.get("beta2", c.beta2);
  obj.get("adam_eps", c.adam_eps);
  obj.get("seed", c.seed);
  std::string precision = "f64";
  obj.get("precision", precision);
  if (precision == "f32") {
    c.precision = tensor::Precision::kFloat32;
  } else if (precision != "f64") {
    throw ConfigError(fmt::format("{}: expected \"f32\" or \"f64\"", obj.path_of("precision")));
  }
  if (obj.contains("lr")) {
    nlohmann::json lr;
    obj.get("lr", lr);
    c.lr = lr_schedule_from_json(lr);
  }
  obj.get("eval_interval", c.eval_interval);
  obj.get("eval_batches", c.eval_batches);
  obj.get("checkpoint_interval", c.checkpoint_interval);
  obj.get("stop_loss", c.stop_loss);
  obj.get("wrap_around", c.wrap_around);
  obj.finish();
  c.validate();
  return c;
}

TrainConfig sft_preset(std::int64_t total_steps) {
  if (total_steps <= 1) throw ConfigError("sft preset: total_steps must be at least 2");
  TrainConfig c;
  c.weight_decay = 0.1;
  c.lr.peak = 6e-5;
  c.lr.floor = 6e-7;
  c.lr.total_steps = total_steps;
  c.lr.warmup_steps = std::llround(0.03 * static_cast<double>(total_steps));
  c.lr.exp_start_fraction = 1.0;
  return c;
}

TrainState::TrainState(model::ModelConfig mc, TrainConfig tc, model::ModelParams p)
    : model_config(std::move(mc)), train_config(std::move(tc)), params(std::move(p)) {
  model_config.validate();
  train_config.validate();
  optimizer = AdamW(params.named(), train_config.adamw());
  optimizer.set_round_to_float(train_config.precision == tensor::Precision::kFloat32);
}

StepMetrics train_step(TrainState& state, std::span<const TokenBatch> micro_batches) {
  const TrainConfig& tc = state.train_config;
  if (micro_batches.size() != tc.accum_steps) {
    throw Error(fmt::format("train_step: got {} micro-batches, accum_steps is {}", micro_batches.size(), tc.accum_steps));
  }
  for (const auto& mb : micro_batches) {
    if (mb.batch != tc.micro_batch || mb.seq_len != tc.seq_len) {
      throw Error(fmt::format("train_step: micro-batch is [{}, {}], expected [{}, {}]", mb.batch, mb.seq_len,
                              tc.micro_batch, tc.seq_len));
    }
  }
  tensor::OptionsScope scope({false, tc.precision, true});
  state.params.zero_grad();
  const double lr = lr_at(tc.lr, state.step);
  const double inv_accum = 1.0 / static_cast<double>(tc.accum_steps);
  double loss_sum = 0.0;
  for (const auto& mb : micro_batches) {
    const auto logits = model::forward(state.params, state.model_config, mb.tokens, mb.batch, mb.seq_len);
    const auto loss = model::lm_loss(logits, mb.targets, mb.loss_mask);
    loss_sum += loss.item();
    tensor::backward(tensor::scale(loss, inv_accum));
  }
  auto tensors = state.params.tensors();
  StepMetrics m;
  m.grad_norm = clip_gradients(tensors, tc.clip_norm);
  state.optimizer.step(lr);
  ++state.step;
  state.tokens_seen += tc.tokens_per_iter();
  m.step = state.step;
  m.lr = lr;
  m.train_loss = loss_sum * inv_accum;
  m.tokens_seen = state.tokens_seen;
  return m;
}

double validate(const model::ModelParams& params, const model::ModelConfig& config, std::span<const TokenBatch> valset) {
  if (valset.empty()) throw Error("validate: empty validation set");
  tensor::NoGradScope no_grad;
  double total = 0.0;
  for (const auto& b : valset) {
    const auto logits = model::forward(params, config, b.tokens, b.batch, b.seq_len);
    total += model::lm_loss(logits, b.targets, b.loss_mask).item();
  }
  return total / static_cast<double>(valset.size());
}

MetricsWriter::MetricsWriter(const std::filesystem::path& path, bool append)
    : out_(path, append ? std::ios::app : std::ios::trunc) {
  if (!out_) throw Error(fmt::format("cannot write {}", path.string()));
  if (!append || std::filesystem::file_size(path) == 0) out_ << header() << '\n';
}

std::string MetricsWriter::header() { return "step,lr,train_loss,val_loss,grad_norm,tokens_seen"; }

std::string MetricsWriter::format(const StepMetrics& m) {
  return fmt::format("{},{},{},{},{},{}", m.step, m.lr, m.train_loss, m.val_loss ? fmt::format("{}", *m.val_loss) : "",
                     m.grad_norm, m.tokens_seen);
}

void MetricsWriter::write(const StepMetrics& m) {
  out_ << format(m) << '\n';
  out_.flush();
}

CheckpointFile to_checkpoint(const TrainState& state, const nlohmann::json& extra) {
  CheckpointFile ckpt;
  const auto& opt = state.optimizer;
  const auto named = state.params.named();
  for (const auto& [name, t] : named) {
    ckpt.add("param/" + name, t.shape(), std::vector<double>(t.data().begin(), t.data().end()));
  }
  for (std::size_t i = 0; i < named.size(); ++i) {
    ckpt.add("adam.m/" + named[i].first, named[i].second.shape(), opt.first_moments()[i]);
    ckpt.add("adam.v/" + named[i].first, named[i].second.shape(), opt.second_moments()[i]);
  }
  const nlohmann::json mc = state.model_config;
  const nlohmann::json tc = state.train_config;
  ckpt.metadata = {{"step", state.step},
                   {"tokens_seen", state.tokens_seen},
                   {"adam_t", opt.steps_taken()},
                   {"model_config", mc},
                   {"train_config", tc},
                   {"model_config_digest", config::digest(mc)},
                   {"train_config_digest", config::digest(tc)}};
  ckpt.metadata.update(extra);
  return ckpt;
}

LoadedModel load_model(const std::filesystem::path& path) {
  const CheckpointFile ckpt = read_checkpoint(path);
  if (!ckpt.metadata.contains("model_config")) throw FormatError(fmt::format("{}: no model_config in header", path.string()));
  LoadedModel out;
  out.config = model::model_config_from_json(ckpt.metadata.at("model_config"));
  out.params = model::init_params(out.config, 0);
  for (const auto& [name, t] : out.params.named()) {
    if (ckpt.shape("param/" + name) != t.shape()) throw FormatError(fmt::format("{}: shape mismatch for {}", path.string(), name));
    const auto& src = ckpt.tensor("param/" + name);
    auto dst = const_cast<tensor::Tensor&>(t).mutable_data();
    std::copy(src.begin(), src.end(), dst.begin());
  }
  out.metadata = ckpt.metadata;
  return out;
}

std::vector<StepMetrics> run_sft(TrainState& state, const std::vector<corpus::SftExample>& examples,
                                 bool loss_on_full_sequence, int bos_id, int eos_id, int pad_id,
                                 MetricsWriter* metrics) {
  const TrainConfig& tc = state.train_config;
  if (examples.empty()) throw Error("run_sft: no examples");
  const std::size_t per_step = tc.micro_batch * tc.accum_steps;
  std::vector<std::size_t> order(examples.size());
  std::size_t cursor = order.size();
  std::uint64_t epoch = 0;
  std::vector<StepMetrics> out;
  while (state.step < tc.lr.total_steps) {
    std::vector<corpus::SftExample> picked;
    while (picked.size() < per_step) {
      if (cursor == order.size()) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng = Rng::derive(tc.seed, fmt::format("sft/epoch{}", epoch++));
        shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      picked.push_back(examples[order[cursor++]]);
    }
    const auto full = corpus::sft_batch(picked, tc.seq_len, loss_on_full_sequence, bos_id, eos_id, pad_id);
    std::vector<TokenBatch> micro;
    for (std::size_t i = 0; i < tc.accum_steps; ++i) micro.push_back(full.rows(i * tc.micro_batch, tc.micro_batch));
    StepMetrics m = train_step(state, micro);
    if (metrics) metrics->write(m);
    if (m.step == 1 || m.step % 50 == 0) {
      log::info("sft step", {{"step", m.step}, {"lr", m.lr}, {"train_loss", m.train_loss}, {"grad_norm", m.grad_norm}});
    }
    out.push_back(m);
    if (tc.stop_loss > 0.0 && m.train_loss < tc.stop_loss) break;
  }
  return out;
}

Trainer::Trainer(TrainState state, corpus::BatchSampler sampler, corpus::MixtureSchedule mixture,
                 std::vector<TokenBatch> valset)
    : state_(std::move(state)), sampler_(std::move(sampler)), mixture_(std::move(mixture)), valset_(std::move(valset)) {
  mixture_.validate();
}

StepMetrics Trainer::step() {
  const TrainConfig& tc = state_.train_config;
  if (state_.step >= tc.lr.total_steps) throw Error("Trainer::step: already at total_steps");
  const auto weights = corpus::weights_at(mixture_, state_.step, tc.lr.total_steps);
  const TokenBatch full = sampler_.sample(weights, tc.micro_batch * tc.accum_steps, tc.seq_len);
  std::vector<TokenBatch> micro;
  micro.reserve(tc.accum_steps);
  for (std::size_t i = 0; i < tc.accum_steps; ++i) micro.push_back(full.rows(i * tc.micro_batch, tc.micro_batch));
  StepMetrics m = train_step(state_, micro);
  if (!valset_.empty() && tc.eval_interval > 0 && (m.step % tc.eval_interval == 0 || m.step == tc.lr.total_steps)) {
    m.val_loss = validate(state_.params, state_.model_config, valset_);
  }
  return m;
}

std::vector<StepMetrics> Trainer::run(std::int64_t until_step, MetricsWriter* metrics,
                                      const std::filesystem::path& checkpoint_dir) {
  const TrainConfig& tc = state_.train_config;
  const std::int64_t end = std::min(until_step, tc.lr.total_steps);
  std::vector<StepMetrics> out;
  while (state_.step < end) {
    StepMetrics m = step();
    if (metrics) metrics->write(m);
    if (m.step == 1 || m.step % 50 == 0 || m.val_loss) {
      nlohmann::json fields = {{"step", m.step}, {"lr", m.lr}, {"train_loss", m.train_loss}, {"grad_norm", m.grad_norm}};
      if (m.val_loss) fields["val_loss"] = *m.val_loss;
      log::info("step", fields);
    }
    if (!checkpoint_dir.empty() && tc.checkpoint_interval > 0 && m.step % tc.checkpoint_interval == 0) {
      save(checkpoint_dir / fmt::format("step_{:08d}.ckpt", m.step));
    }
    out.push_back(m);
    if (tc.stop_loss > 0.0 && m.train_loss < tc.stop_loss) break;
  }
  return out;
}

void Trainer::save(const std::filesystem::path& path) const {
  const nlohmann::json mix = corpus::mixture_to_json(mixture_);
  write_checkpoint(path, to_checkpoint(state_, {{"mixture_digest", config::digest(mix)}, {"sampler", sampler_.state()}}));
}

void Trainer::load(const std::filesystem::path& path) {
  const CheckpointFile ckpt = read_checkpoint(path);
  const auto& meta = ckpt.metadata;
  const auto check = [&](const char* key, std::uint64_t expected) {
    if (!meta.contains(key) || meta.at(key).get<std::uint64_t>() != expected) {
      throw ConfigError(fmt::format("{}: {} does not match the current configuration", path.string(), key));
    }
  };
  check("model_config_digest", config::digest(nlohmann::json(state_.model_config)));
  check("train_config_digest", config::digest(nlohmann::json(state_.train_config)));
  check("mixture_digest", config::digest(corpus::mixture_to_json(mixture_)));

  // Validate everything before touching live state.
  const auto named = state_.params.named();
  std::vector<std::vector<double>> m, v;
  for (const auto& [name, t] : named) {
    for (const char* prefix : {"param/", "adam.m/", "adam.v/"}) {
      if (ckpt.shape(prefix + name) != t.shape()) throw FormatError(fmt::format("{}: shape mismatch for {}{}", path.string(), prefix, name));
    }
    m.push_back(ckpt.tensor("adam.m/" + name));
    v.push_back(ckpt.tensor("adam.v/" + name));
  }
  corpus::BatchSampler sampler = sampler_;
  sampler.set_state(meta.at("sampler"));

  for (const auto& [name, t] : named) {
    const auto& src = ckpt.tensor("param/" + name);
    auto dst = const_cast<tensor::Tensor&>(t).mutable_data();
    std::copy(src.begin(), src.end(), dst.begin());
  }
  state_.optimizer.set_state(meta.at("adam_t").get<std::int64_t>(), std::move(m), std::move(v));
  state_.step = meta.at("step").get<std::int64_t>();
  state_.tokens_seen = meta.at("tokens_seen").get<std::uint64_t>();
  sampler_ = std::move(sampler);
}

}  // namespace xmodel::trainer
