#pragma once

#include <cstddef>
#include <span>

#include "xmodel/model/config.hpp"
#include "xmodel/model/params.hpp"
#include "xmodel/tensor/tensor.hpp"

namespace xmodel::model {

// x / sqrt(mean(x^2) + eps) * gain over the last dimension.
Tensor rms_norm(const Tensor& x, const Tensor& gain, double eps);

// x: [..., seq, n, head_dim]; positions has `seq` entries. Pair
// (x[2i], x[2i+1]) at position p is rotated by p * base^(-2i/head_dim).
Tensor rope_apply(const Tensor& x, std::span<const int> positions, double base);

// x: [batch*seq, hidden] (already normalized). Causal grouped-query
// attention including the output projection.
Tensor gqa_attention(const Tensor& x, const LayerParams& layer, const ModelConfig& config, std::size_t batch,
                     std::size_t seq);

// down(silu(gate(x)) * up(x))
Tensor swiglu_mlp(const Tensor& x, const Tensor& w_gate, const Tensor& w_up, const Tensor& w_down);

}  // namespace xmodel::model
