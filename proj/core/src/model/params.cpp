#include "xmodel/model/params.hpp"

#include <cmath>
#include <map>

#include <fmt/format.h>

#include "xmodel/error.hpp"
#include "xmodel/util/rng.hpp"

namespace xmodel::model {
namespace {

constexpr double kInitStd = 0.02;

Tensor normal_matrix(Rng& rng, std::size_t rows, std::size_t cols, double stddev) {
  std::vector<double> data(rows * cols);
  for (auto& v : data) v = rng.normal(0.0, stddev);
  return Tensor::from_data({rows, cols}, std::move(data), true);
}

Tensor ones(std::size_t n) { return Tensor::full({n}, 1.0, true); }

template <typename Fn>
void for_each_slot(ModelParams& p, std::size_t n_layers, Fn&& fn) {
  fn("tok_embeddings", p.tok_embeddings);
  for (std::size_t i = 0; i < n_layers; ++i) {
    auto& l = p.layers[i];
    const std::string pre = fmt::format("layers.{}.", i);
    fn(pre + "attn_norm", l.attn_norm);
    fn(pre + "wq", l.wq);
    fn(pre + "wk", l.wk);
    fn(pre + "wv", l.wv);
    fn(pre + "wo", l.wo);
    fn(pre + "mlp_norm", l.mlp_norm);
    fn(pre + "w_gate", l.w_gate);
    fn(pre + "w_up", l.w_up);
    fn(pre + "w_down", l.w_down);
  }
  fn("final_norm", p.final_norm);
  fn("lm_head", p.lm_head);
}

}  // namespace

std::vector<std::pair<std::string, Tensor>> ModelParams::named() const {
  std::vector<std::pair<std::string, Tensor>> out;
  auto& self = const_cast<ModelParams&>(*this);
  for_each_slot(self, layers.size(), [&](const std::string& name, Tensor& t) { out.emplace_back(name, t); });
  return out;
}

std::vector<Tensor> ModelParams::tensors() const {
  std::vector<Tensor> out;
  for (auto& [name, t] : named()) out.push_back(t);
  return out;
}

std::size_t ModelParams::num_parameters() const {
  std::size_t n = 0;
  for (const auto& t : tensors()) n += t.numel();
  return n;
}

void ModelParams::zero_grad() {
  for (auto& t : tensors()) t.zero_grad();
}

ModelParams ModelParams::clone() const {
  ModelParams out = *this;
  for_each_slot(out, out.layers.size(), [](const std::string&, Tensor& t) { t = t.detach(true); });
  return out;
}

bool is_decay_exempt(const std::string& name) {
  return name == "tok_embeddings" || name.ends_with("norm");
}

ModelParams init_params(const ModelConfig& c, std::uint64_t seed) {
  c.validate();
  Rng rng(seed);
  const double resid = kInitStd / std::sqrt(2.0 * static_cast<double>(c.n_layers));
  ModelParams p;
  p.tok_embeddings = normal_matrix(rng, c.vocab_size, c.hidden, kInitStd);
  for (std::size_t i = 0; i < c.n_layers; ++i) {
    LayerParams l;
    l.attn_norm = ones(c.hidden);
    l.wq = normal_matrix(rng, c.hidden, c.hidden, kInitStd);
    l.wk = normal_matrix(rng, c.hidden, c.kv_dim(), kInitStd);
    l.wv = normal_matrix(rng, c.hidden, c.kv_dim(), kInitStd);
    l.wo = normal_matrix(rng, c.hidden, c.hidden, resid);
    l.mlp_norm = ones(c.hidden);
    l.w_gate = normal_matrix(rng, c.hidden, c.intermediate, kInitStd);
    l.w_up = normal_matrix(rng, c.hidden, c.intermediate, kInitStd);
    l.w_down = normal_matrix(rng, c.intermediate, c.hidden, resid);
    p.layers.push_back(std::move(l));
  }
  p.final_norm = ones(c.hidden);
  p.lm_head = normal_matrix(rng, c.hidden, c.vocab_size, kInitStd);
  return p;
}

ModelParams params_from_named(const ModelConfig& c, std::vector<std::pair<std::string, Tensor>> named) {
  c.validate();
  std::map<std::string, Tensor> by_name;
  for (auto& [name, t] : named) {
    if (!by_name.emplace(name, t).second) throw FormatError(fmt::format("duplicate parameter \"{}\"", name));
  }
  // Shapes come from a freshly shaped (not initialized) template.
  ModelParams p;
  p.layers.resize(c.n_layers);
  const auto expected_shape = [&](const std::string& name) -> tensor::Shape {
    if (name == "tok_embeddings") return {c.vocab_size, c.hidden};
    if (name == "lm_head") return {c.hidden, c.vocab_size};
    if (name.ends_with("norm")) return {c.hidden};
    if (name.ends_with(".wq") || name.ends_with(".wo")) return {c.hidden, c.hidden};
    if (name.ends_with(".wk") || name.ends_with(".wv")) return {c.hidden, c.kv_dim()};
    if (name.ends_with(".w_down")) return {c.intermediate, c.hidden};
    return {c.hidden, c.intermediate};
  };
  for_each_slot(p, c.n_layers, [&](const std::string& name, Tensor& slot) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw FormatError(fmt::format("missing parameter \"{}\"", name));
    if (it->second.shape() != expected_shape(name)) {
      throw FormatError(fmt::format("parameter \"{}\" has shape {}, expected {}", name,
                                    tensor::to_string(it->second.shape()), tensor::to_string(expected_shape(name))));
    }
    slot = it->second.detach(true);
    by_name.erase(it);
  });
  if (!by_name.empty()) throw FormatError(fmt::format("unexpected parameter \"{}\"", by_name.begin()->first));
  return p;
}

}  // namespace xmodel::model
