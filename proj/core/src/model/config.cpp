#include "xmodel/model/config.hpp"

#include <cmath>

#include <fmt/format.h>

#include "xmodel/error.hpp"
#include "xmodel/util/config.hpp"

namespace xmodel::model {

void ModelConfig::validate() const {
  const auto fail = [](const std::string& msg) { throw ConfigError("model config: " + msg); };
  if (hidden == 0 || intermediate == 0 || n_heads == 0 || n_kv_heads == 0 || n_layers == 0 || context_len == 0 ||
      vocab_size == 0) {
    fail("all sizes must be positive");
  }
  if (hidden % n_heads != 0) fail(fmt::format("hidden {} is not divisible by n_heads {}", hidden, n_heads));
  if (n_heads % n_kv_heads != 0) fail(fmt::format("n_heads {} is not divisible by n_kv_heads {}", n_heads, n_kv_heads));
  if (head_dim() % 2 != 0) fail(fmt::format("head_dim {} must be even for rotary pairs", head_dim()));
  if (!(rope_base > 0.0) || !std::isfinite(rope_base)) fail("rope_base must be positive");
  if (!(rmsnorm_eps > 0.0)) fail("rmsnorm_eps must be positive");
}

std::size_t ModelConfig::num_parameters() const {
  const std::size_t per_layer = 2 * hidden + 2 * hidden * hidden + 2 * hidden * kv_dim() + 3 * hidden * intermediate;
  return 2 * vocab_size * hidden + n_layers * per_layer + hidden;
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = {{"hidden", c.hidden},           {"intermediate", c.intermediate}, {"n_heads", c.n_heads},
       {"n_kv_heads", c.n_kv_heads},   {"n_layers", c.n_layers},         {"context_len", c.context_len},
       {"vocab_size", c.vocab_size},   {"rope_base", c.rope_base},       {"rmsnorm_eps", c.rmsnorm_eps}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  config::StrictObject obj(j, "$");
  ModelConfig c;
  obj.get("hidden", c.hidden);
  obj.get("intermediate", c.intermediate);
  obj.get("n_heads", c.n_heads);
  obj.get("n_kv_heads", c.n_kv_heads);
  obj.get("n_layers", c.n_layers);
  obj.get("context_len", c.context_len);
  obj.get("vocab_size", c.vocab_size);
  obj.get("rope_base", c.rope_base);
  obj.get("rmsnorm_eps", c.rmsnorm_eps);
  obj.finish();
  c.validate();
  return c;
}

ModelConfig model_preset(std::string_view name) {
  if (name == "micro") return ModelConfig{};
  if (name == "paper") return ModelConfig{2048, 5632, 32, 4, 24, 4096, 65280, 500000.0, 1e-5};
  if (name == "gradcheck") return ModelConfig{16, 44, 4, 2, 2, 16, 31, 500000.0, 1e-5};
  throw ConfigError(fmt::format("unknown model preset \"{}\"", name));
}

std::vector<std::string> model_preset_names() { return {"micro", "paper", "gradcheck"}; }

}  // namespace xmodel::model
