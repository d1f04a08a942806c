#include "xmodel/trainer/optimizer.hpp"

#include <cmath>

#include <fmt/format.h>

#include "xmodel/error.hpp"
#include "xmodel/model/params.hpp"

namespace xmodel::trainer {

AdamW::AdamW(std::vector<std::pair<std::string, Tensor>> params, AdamWConfig config)
    : params_(std::move(params)), config_(config) {
  for (const auto& [name, t] : params_) {
    if (!t.is_leaf() || !t.requires_grad()) throw Error(fmt::format("AdamW: \"{}\" is not a trainable leaf", name));
    decay_.push_back(!model::is_decay_exempt(name));
    m_.emplace_back(t.numel(), 0.0);
    v_.emplace_back(t.numel(), 0.0);
  }
}

void AdamW::step(double lr) {
  ++t_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  const double shrink = 1.0 - lr * config_.weight_decay;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i].second;
    auto data = p.mutable_data();
    const auto grad = p.has_grad() ? p.grad() : std::span<const double>{};
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t k = 0; k < data.size(); ++k) {
      const double g = grad.empty() ? 0.0 : grad[k];
      if (decay_[i]) data[k] *= shrink;
      m[k] = b1 * m[k] + (1.0 - b1) * g;
      v[k] = b2 * v[k] + (1.0 - b2) * g * g;
      data[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + config_.eps);
      if (round_to_float_) data[k] = static_cast<double>(static_cast<float>(data[k]));
    }
  }
}

void AdamW::set_state(std::int64_t t, std::vector<std::vector<double>> m, std::vector<std::vector<double>> v) {
  if (m.size() != params_.size() || v.size() != params_.size()) throw FormatError("AdamW state: parameter count mismatch");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (m[i].size() != params_[i].second.numel() || v[i].size() != params_[i].second.numel()) {
      throw FormatError(fmt::format("AdamW state: size mismatch for \"{}\"", params_[i].first));
    }
  }
  t_ = t;
  m_ = std::move(m);
  v_ = std::move(v);
}

double global_grad_norm(std::span<const Tensor> params) {
  double sq = 0.0;
  for (const auto& p : params) {
    if (!p.has_grad()) continue;
    for (double g : p.grad()) sq += g * g;
  }
  return std::sqrt(sq);
}

double clip_gradients(std::span<Tensor> params, double threshold) {
  if (!(threshold > 0.0)) throw Error("clip_gradients: threshold must be positive");
  const double norm = global_grad_norm(params);
  if (norm > threshold) {
    const double factor = threshold / norm;
    for (auto& p : params) {
      if (!p.has_grad()) continue;
      for (double& g : p.mutable_grad()) g *= factor;
    }
  }
  return norm;
}

}  // namespace xmodel::trainer
