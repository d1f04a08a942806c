#pragma once

#include <span>
#include <vector>

#include "xmodel/tensor/tensor.hpp"

namespace xmodel::tensor {

// Every op checks shapes, computes the output eagerly and, when any input
// requires grad and grad recording is enabled, records a backward closure.
//
// Broadcasting is limited to three explicit forms:
//   add(a, b):  b.shape == a.shape, or b is a [a.last] bias vector
//   mul(a, b):  b.shape == a.shape, b is a [a.last] gain vector, or
//               b is a.shape[:-1] + [1] (one factor per row)
//   scale(a, c): c is a plain double
// Anything else needs an explicit reshape.

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor transpose2d(const Tensor& a);
Tensor reshape(const Tensor& a, Shape shape);
Tensor concat(std::span<const Tensor> parts, std::size_t dim);
Tensor slice(const Tensor& a, std::size_t dim, std::size_t start, std::size_t length);
// table [V, H], ids -> [ids.size(), H]
Tensor embedding_lookup(const Tensor& table, std::span<const int> ids);
Tensor softmax_lastdim(const Tensor& a);
Tensor silu(const Tensor& a);
// [..., D] -> [..., 1]
Tensor mean_lastdim(const Tensor& a);
// 1 / sqrt(a + eps), elementwise
Tensor rsqrt(const Tensor& a, double eps = 0.0);
// -> scalar (shape {})
Tensor sum(const Tensor& a);
// logits [..., V] viewed as rows. Returns the scalar
//   sum_i w_i * -log softmax(row_i)[target_i] / sum_i w_i
// with w = `weights` (all ones when empty). Errors if sum w == 0.
Tensor cross_entropy_rows(const Tensor& logits, std::span<const int> targets,
                          std::span<const double> weights = {});
// mask ? a : fill, elementwise; mask is a same-shape tensor of 0/1.
Tensor where_mask(const Tensor& mask, const Tensor& a, double fill);

}  // namespace xmodel::tensor
