#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace xmodel::model {

struct ModelConfig {
  std::size_t hidden = 128;
  std::size_t intermediate = 352;
  std::size_t n_heads = 8;
  std::size_t n_kv_heads = 1;
  std::size_t n_layers = 4;
  std::size_t context_len = 256;
  std::size_t vocab_size = 1024;
  double rope_base = 500000.0;
  double rmsnorm_eps = 1e-5;

  std::size_t head_dim() const { return hidden / n_heads; }
  std::size_t kv_dim() const { return n_kv_heads * head_dim(); }
  // Throws ConfigError naming the violated invariant.
  void validate() const;
  std::size_t num_parameters() const;
  bool operator==(const ModelConfig&) const = default;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
// Strict: exactly the nine documented keys are accepted.
ModelConfig model_config_from_json(const nlohmann::json& j);

// "micro" (desk default), "paper" (2048/5632/32/4/24/4096, 65,280 vocab),
// "gradcheck" (hidden 16, 2 layers, vocab 31).
ModelConfig model_preset(std::string_view name);
std::vector<std::string> model_preset_names();

// Query head h reads KV group h / (n_heads / n_kv_heads).
inline std::size_t kv_group_for_head(std::size_t head, const ModelConfig& c) {
  return head / (c.n_heads / c.n_kv_heads);
}

}  // namespace xmodel::model
