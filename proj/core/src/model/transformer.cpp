#include "xmodel/model/transformer.hpp"

#include <fmt/format.h>

#include "xmodel/error.hpp"
#include "xmodel/model/layers.hpp"
#include "xmodel/tensor/ops.hpp"

namespace xmodel::model {

using namespace xmodel::tensor;

Tensor forward(const ModelParams& params, const ModelConfig& config, std::span<const int> tokens, std::size_t batch,
               std::size_t seq) {
  config.validate();
  if (batch == 0 || seq == 0) throw Error("forward: batch and seq must be positive");
  if (tokens.size() != batch * seq) {
    throw ShapeError(fmt::format("forward: {} tokens for [{}, {}]", tokens.size(), batch, seq));
  }
  if (seq > config.context_len) {
    throw Error(fmt::format("forward: sequence length {} exceeds context_len {}", seq, config.context_len));
  }
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] < 0 || static_cast<std::size_t>(tokens[i]) >= config.vocab_size) {
      throw Error(fmt::format("forward: token id {} at position {} outside vocab of {}", tokens[i], i, config.vocab_size));
    }
  }
  if (params.layers.size() != config.n_layers) throw Error("forward: params do not match config.n_layers");

  Tensor h = embedding_lookup(params.tok_embeddings, tokens);
  for (const auto& layer : params.layers) {
    h = add(h, gqa_attention(rms_norm(h, layer.attn_norm, config.rmsnorm_eps), layer, config, batch, seq));
    h = add(h, swiglu_mlp(rms_norm(h, layer.mlp_norm, config.rmsnorm_eps), layer.w_gate, layer.w_up, layer.w_down));
  }
  FullPrecisionScope full;
  const Tensor logits = matmul(rms_norm(h, params.final_norm, config.rmsnorm_eps), params.lm_head);
  return reshape(logits, {batch, seq, config.vocab_size});
}

Tensor lm_loss(const Tensor& logits, std::span<const int> targets, std::span<const std::uint8_t> mask) {
  const std::size_t rows = logits.numel() / logits.dim(logits.rank() - 1);
  if (targets.size() != rows || mask.size() != rows) {
    throw ShapeError(fmt::format("lm_loss: {} rows of logits, {} targets, {} mask entries", rows, targets.size(),
                                 mask.size()));
  }
  std::vector<double> weights(rows);
  bool any = false;
  for (std::size_t i = 0; i < rows; ++i) {
    weights[i] = mask[i] ? 1.0 : 0.0;
    any = any || mask[i];
  }
  if (!any) throw Error("lm_loss: mask selects no positions");
  FullPrecisionScope full;
  return cross_entropy_rows(logits, targets, weights);
}

}  // namespace xmodel::model
