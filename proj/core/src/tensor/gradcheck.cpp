#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "xmodel/error.hpp"
#include "xmodel/tensor/autograd.hpp"
#include "xmodel/util/rng.hpp"

namespace xmodel::tensor {

namespace {

double scalar_value(const Tensor& t) {
  if (t.numel() != 1) {
    throw ShapeError(fmt::format("finite_diff_check: function must be scalar-valued, got shape {}",
                                 to_string(t.shape())));
  }
  return t.item();
}

using IndexSets = std::vector<std::vector<std::size_t>>;

double check_indices(const std::function<Tensor()>& f, std::span<Tensor> params, const IndexSets& indices,
                     double eps) {
  if (!(eps > 0.0)) throw Error("finite_diff_check: eps must be positive");
  for (auto& p : params) p.zero_grad();

  const Tensor loss = f();
  scalar_value(loss);
  std::vector<std::vector<double>> analytic;
  if (loss.requires_grad()) {
    backward(loss);
    for (auto& p : params) {
      analytic.emplace_back(p.has_grad() ? std::vector<double>(p.grad().begin(), p.grad().end())
                                         : std::vector<double>(p.numel(), 0.0));
    }
  } else {
    // Constant function: the analytic gradient is identically zero.
    for (auto& p : params) analytic.emplace_back(p.numel(), 0.0);
  }

  NoGradScope no_grad;
  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto values = params[k].mutable_data();
    for (const std::size_t i : indices[k]) {
      const double saved = values[i];
      values[i] = saved + eps;
      const double up = scalar_value(f());
      values[i] = saved - eps;
      const double down = scalar_value(f());
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[k][i];
      worst = std::max(worst, std::abs(a - numeric) / std::max(1.0, std::abs(a)));
    }
  }
  for (auto& p : params) p.zero_grad();
  return worst;
}

}  // namespace

double finite_diff_check(const std::function<Tensor()>& f, std::span<Tensor> params, double eps) {
  IndexSets all;
  for (const auto& p : params) {
    all.emplace_back(p.numel());
    std::iota(all.back().begin(), all.back().end(), std::size_t{0});
  }
  return check_indices(f, params, all, eps);
}

double finite_diff_check_sampled(const std::function<Tensor()>& f, std::span<Tensor> params, std::size_t per_tensor,
                                 std::uint64_t seed, double eps) {
  Rng rng(seed);
  IndexSets picked;
  for (const auto& p : params) {
    std::vector<std::size_t> idx(p.numel());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (idx.size() > per_tensor) {
      // Partial Fisher-Yates.
      for (std::size_t i = 0; i < per_tensor; ++i) std::swap(idx[i], idx[i + rng.uniform(idx.size() - i)]);
      idx.resize(per_tensor);
    }
    picked.push_back(std::move(idx));
  }
  return check_indices(f, params, picked, eps);
}

double finite_diff_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double eps) {
  Tensor leaf = x.detach(true);
  Tensor params[] = {leaf};
  return finite_diff_check([&] { return f(leaf); }, params, eps);
}

}  // namespace xmodel::tensor
