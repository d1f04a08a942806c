#include "xmodel/model/layers.hpp"

#include <cmath>

#include <fmt/format.h>

#include "xmodel/error.hpp"
#include "xmodel/tensor/ops.hpp"

namespace xmodel::model {

using namespace xmodel::tensor;

Tensor rms_norm(const Tensor& x, const Tensor& gain, double eps) {
  if (!(eps > 0.0)) throw Error("rms_norm: eps must be positive");
  const Tensor inv = rsqrt(mean_lastdim(mul(x, x)), eps);
  return mul(mul(x, inv), gain);
}

Tensor rope_apply(const Tensor& x, std::span<const int> positions, double base) {
  const std::size_t r = x.rank();
  if (r < 3) throw ShapeError(fmt::format("rope_apply: expected [..., seq, n, head_dim], got {}", to_string(x.shape())));
  const std::size_t hd = x.dim(r - 1);
  const std::size_t n = x.dim(r - 2);
  const std::size_t seq = x.dim(r - 3);
  if (hd % 2 != 0) throw ShapeError(fmt::format("rope_apply: head_dim {} is odd", hd));
  if (positions.size() != seq) {
    throw ShapeError(fmt::format("rope_apply: {} positions for sequence length {}", positions.size(), seq));
  }
  std::vector<double> inv_freq(hd / 2);
  for (std::size_t i = 0; i < hd / 2; ++i) {
    inv_freq[i] = std::pow(base, -2.0 * static_cast<double>(i) / static_cast<double>(hd));
  }
  const std::size_t pairs = x.numel() / 2;
  std::vector<double> cos_v(pairs), sin_v(pairs);
  for (std::size_t p = 0; p < pairs; ++p) {
    const std::size_t e = 2 * p;
    const std::size_t i = (e % hd) / 2;
    const std::size_t s = (e / (n * hd)) % seq;
    const double theta = static_cast<double>(positions[s]) * inv_freq[i];
    cos_v[p] = std::cos(theta);
    sin_v[p] = std::sin(theta);
  }
  const Tensor c = Tensor::from_data({pairs, 1}, std::move(cos_v));
  const Tensor sn = Tensor::from_data({pairs, 1}, std::move(sin_v));
  const Tensor xy = reshape(x, {pairs, 2});
  const Tensor a = slice(xy, 1, 0, 1);
  const Tensor b = slice(xy, 1, 1, 1);
  const Tensor parts[] = {add(mul(a, c), scale(mul(b, sn), -1.0)), add(mul(a, sn), mul(b, c))};
  return reshape(concat(parts, 1), x.shape());
}

Tensor gqa_attention(const Tensor& x, const LayerParams& layer, const ModelConfig& config, std::size_t batch,
                     std::size_t seq) {
  config.validate();
  const std::size_t hidden = config.hidden;
  const std::size_t hd = config.head_dim();
  if (x.rank() != 2 || x.dim(0) != batch * seq || x.dim(1) != hidden) {
    throw ShapeError(fmt::format("gqa_attention: expected [{}, {}], got {}", batch * seq, hidden, to_string(x.shape())));
  }
  std::vector<int> positions(seq);
  for (std::size_t t = 0; t < seq; ++t) positions[t] = static_cast<int>(t);

  Tensor q = matmul(x, layer.wq);
  Tensor k = matmul(x, layer.wk);
  const Tensor v = matmul(x, layer.wv);
  q = reshape(rope_apply(reshape(q, {batch, seq, config.n_heads, hd}), positions, config.rope_base),
              {batch * seq, hidden});
  k = reshape(rope_apply(reshape(k, {batch, seq, config.n_kv_heads, hd}), positions, config.rope_base),
              {batch * seq, config.kv_dim()});

  std::vector<double> mask_data(seq * seq, 0.0);
  for (std::size_t i = 0; i < seq; ++i) {
    for (std::size_t j = 0; j <= i; ++j) mask_data[i * seq + j] = 1.0;
  }
  const Tensor mask = Tensor::from_data({seq, seq}, std::move(mask_data));
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(hd));

  std::vector<Tensor> rows;
  rows.reserve(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    const Tensor qb = slice(q, 0, b * seq, seq);
    const Tensor kb = slice(k, 0, b * seq, seq);
    const Tensor vb = slice(v, 0, b * seq, seq);
    std::vector<Tensor> k_t(config.n_kv_heads), vg(config.n_kv_heads);
    for (std::size_t g = 0; g < config.n_kv_heads; ++g) {
      k_t[g] = transpose2d(slice(kb, 1, g * hd, hd));
      vg[g] = slice(vb, 1, g * hd, hd);
    }
    std::vector<Tensor> heads;
    heads.reserve(config.n_heads);
    for (std::size_t h = 0; h < config.n_heads; ++h) {
      const std::size_t g = kv_group_for_head(h, config);
      const Tensor scores = where_mask(mask, scale(matmul(slice(qb, 1, h * hd, hd), k_t[g]), inv_sqrt), -1e30);
      heads.push_back(matmul(softmax_lastdim(scores), vg[g]));
    }
    rows.push_back(concat(heads, 1));
  }
  return matmul(concat(rows, 0), layer.wo);
}

Tensor swiglu_mlp(const Tensor& x, const Tensor& w_gate, const Tensor& w_up, const Tensor& w_down) {
  return matmul(mul(silu(matmul(x, w_gate)), matmul(x, w_up)), w_down);
}

}  // namespace xmodel::model
