#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "xmodel/tensor/tensor.hpp"

namespace xmodel::trainer {

using tensor::Tensor;

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.95;
  double eps = 1e-8;
  double weight_decay = 0.1;
};

// AdamW over named leaf tensors. Decay is decoupled: a decayed parameter is
// first multiplied by (1 - lr * wd), then takes the bias-corrected Adam
// step. Parameters without a gradient are treated as having a zero one.
class AdamW {
 public:
  AdamW() = default;
  AdamW(std::vector<std::pair<std::string, Tensor>> params, AdamWConfig config);

  void step(double lr);

  std::int64_t steps_taken() const { return t_; }
  const AdamWConfig& config() const { return config_; }
  const std::vector<std::pair<std::string, Tensor>>& params() const { return params_; }
  bool decays(std::size_t i) const { return decay_[i]; }

  // Moments, for checkpoints. Index order follows params().
  const std::vector<std::vector<double>>& first_moments() const { return m_; }
  const std::vector<std::vector<double>>& second_moments() const { return v_; }
  void set_state(std::int64_t t, std::vector<std::vector<double>> m, std::vector<std::vector<double>> v);

  // Rounds parameters through float after each step (32-bit runs).
  void set_round_to_float(bool on) { round_to_float_ = on; }

 private:
  std::vector<std::pair<std::string, Tensor>> params_;
  std::vector<bool> decay_;
  AdamWConfig config_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::int64_t t_ = 0;
  bool round_to_float_ = false;
};

// Global L2 norm over every gradient; if above threshold all gradients are
// scaled by threshold / norm. Returns the norm before clipping.
double clip_gradients(std::span<Tensor> params, double threshold);
double global_grad_norm(std::span<const Tensor> params);

}  // namespace xmodel::trainer
