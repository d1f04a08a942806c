#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "xmodel/model/config.hpp"
#include "xmodel/model/params.hpp"
#include "xmodel/tensor/tensor.hpp"

namespace xmodel::model {

// tokens: row-major [batch, seq]. Returns logits [batch, seq, vocab].
// The final norm and lm_head always run in 64-bit.
Tensor forward(const ModelParams& params, const ModelConfig& config, std::span<const int> tokens, std::size_t batch,
               std::size_t seq);

// Mean next-token cross-entropy over positions with mask != 0.
Tensor lm_loss(const Tensor& logits, std::span<const int> targets, std::span<const std::uint8_t> mask);

}  // namespace xmodel::model
