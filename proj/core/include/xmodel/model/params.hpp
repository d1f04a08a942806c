#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "xmodel/model/config.hpp"
#include "xmodel/tensor/tensor.hpp"

namespace xmodel::model {

using tensor::Tensor;

// Linear weights are stored [in, out] so a projection is matmul(x, w).
struct LayerParams {
  Tensor attn_norm;  // [hidden]
  Tensor wq;         // [hidden, hidden]
  Tensor wk;         // [hidden, kv_dim]
  Tensor wv;         // [hidden, kv_dim]
  Tensor wo;         // [hidden, hidden]
  Tensor mlp_norm;   // [hidden]
  Tensor w_gate;     // [hidden, intermediate]
  Tensor w_up;       // [hidden, intermediate]
  Tensor w_down;     // [intermediate, hidden]
};

struct ModelParams {
  Tensor tok_embeddings;  // [vocab, hidden]
  std::vector<LayerParams> layers;
  Tensor final_norm;  // [hidden]
  Tensor lm_head;     // [hidden, vocab], separate storage from tok_embeddings

  // Stable order: tok_embeddings, layers.0.attn_norm, ..., final_norm, lm_head.
  std::vector<std::pair<std::string, Tensor>> named() const;
  std::vector<Tensor> tensors() const;
  std::size_t num_parameters() const;
  void zero_grad();
  // Deep copy with fresh leaves.
  ModelParams clone() const;
};

// Norm gains and embeddings are excluded from weight decay.
bool is_decay_exempt(const std::string& name);

// Gains 1; every matrix normal(0, 0.02), with wo and w_down further scaled
// by 1/sqrt(2 * n_layers).
ModelParams init_params(const ModelConfig& config, std::uint64_t seed);

// Builds params from named tensors (checkpoint load). Throws on missing,
// extra or misshapen entries.
ModelParams params_from_named(const ModelConfig& config, std::vector<std::pair<std::string, Tensor>> named);

}  // namespace xmodel::model
