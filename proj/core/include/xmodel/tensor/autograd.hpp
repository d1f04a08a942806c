#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>

#include "xmodel/tensor/tensor.hpp"

namespace xmodel::tensor {

// Gradients of every requires_grad leaf reachable from the loss, keyed by
// Tensor::id(). Leaf grads also accumulate in place (Tensor::grad()), so
// several backward passes between zero_grad() calls sum their gradients.
using GradMap = std::map<std::uint64_t, Tensor>;

// Runs reverse-mode differentiation from a scalar loss. The tape is
// consumed: interior nodes drop their history and a second call on the same
// loss throws.
GradMap backward(const Tensor& loss);

// Max over components of |analytic - numeric| / max(1, |analytic|), where
// numeric is the central difference with step `eps`.
double finite_diff_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double eps = 1e-5);

// Same, over several parameters that `f` closes over. Parameters are
// perturbed in place and restored.
double finite_diff_check(const std::function<Tensor()>& f, std::span<Tensor> params, double eps = 1e-5);

// Checks only `per_tensor` components of each parameter, drawn with
// Rng(seed) (all of them for smaller tensors).
double finite_diff_check_sampled(const std::function<Tensor()>& f, std::span<Tensor> params, std::size_t per_tensor,
                                 std::uint64_t seed, double eps = 1e-5);

}  // namespace xmodel::tensor
