#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "xmodel/error.hpp"
#include "xmodel/model/config.hpp"
#include "xmodel/model/layers.hpp"
#include "xmodel/model/params.hpp"
#include "xmodel/model/transformer.hpp"
#include "xmodel/tensor/autograd.hpp"
#include "xmodel/tensor/ops.hpp"

using namespace xmodel;
using namespace xmodel::model;
using tensor::Tensor;

namespace {

ModelConfig tiny_config(std::size_t heads, std::size_t kv) {
  ModelConfig c;
  c.hidden = 16;
  c.intermediate = 24;
  c.n_heads = heads;
  c.n_kv_heads = kv;
  c.n_layers = 2;
  c.context_len = 12;
  c.vocab_size = 29;
  return c;
}

Tensor random_input(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(rows * cols);
  for (auto& x : v) x = rng.normal();
  return Tensor::from_data({rows, cols}, std::move(v));
}

std::vector<int> random_tokens(std::size_t n, std::size_t vocab, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<int> t(n);
  for (auto& x : t) x = static_cast<int>(rng.uniform(vocab));
  return t;
}

}  // namespace

TEST(RmsNorm, OnesStayOnes) {
  const auto y = rms_norm(Tensor::full({1, 4}, 1.0), Tensor::full({4}, 1.0), 1e-12);
  for (double v : y.data()) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(RmsNorm, HandCase) {
  const auto y = rms_norm(Tensor::from_data({1, 2}, {3, 4}), Tensor::full({2}, 1.0), 1e-12);
  // rms = sqrt(12.5)
  EXPECT_NEAR(y.at(0), 0.848528137423857, 1e-12);
  EXPECT_NEAR(y.at(1), 1.131370849898476, 1e-12);
}

TEST(RmsNorm, ScaleEquivariant) {
  const auto x = random_input(3, 8, 1);
  const auto g = random_input(1, 8, 2);
  const auto gain = tensor::reshape(g, {8});
  const auto a = rms_norm(x, gain, 1e-12);
  const auto b = rms_norm(tensor::scale(x, 37.5), gain, 1e-12);
  for (std::size_t i = 0; i < a.numel(); ++i) EXPECT_NEAR(a.at(i), b.at(i), 1e-6);
}

TEST(Rope, PositionZeroIsIdentity) {
  const auto x = random_input(1, 8, 3);
  const auto in = tensor::reshape(x, {1, 2, 4});
  const std::vector<int> pos = {0};
  const auto y = rope_apply(in, pos, 10000.0);
  for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(y.at(i), x.at(i));
}

TEST(Rope, FirstPairRotatesOneRadian) {
  const auto x = Tensor::from_data({2, 1, 2}, {1, 0, 1, 0});
  const std::vector<int> pos = {0, 1};
  for (double base : {10000.0, 500000.0}) {
    const auto y = rope_apply(x, pos, base);
    EXPECT_NEAR(y.at(2), 0.5403023058681398, 1e-15);
    EXPECT_NEAR(y.at(3), 0.8414709848078965, 1e-15);
  }
}

TEST(Rope, PreservesPairNorms) {
  const auto x = tensor::reshape(random_input(6, 16, 4), {6, 2, 8});
  std::vector<int> pos = {0, 1, 2, 100, 4095, 70000};
  const auto y = rope_apply(x, pos, 500000.0);
  for (std::size_t i = 0; i < x.numel(); i += 2) {
    const double a = std::hypot(x.at(i), x.at(i + 1));
    const double b = std::hypot(y.at(i), y.at(i + 1));
    EXPECT_NEAR(a, b, 1e-12);
  }
}

TEST(Rope, OddHeadDimThrows) {
  const auto x = Tensor::zeros({2, 1, 3});
  const std::vector<int> pos = {0, 1};
  EXPECT_THROW(rope_apply(x, pos, 10000.0), Error);
  auto c = tiny_config(4, 2);
  c.hidden = 12;
  c.n_heads = 4;
  c.n_kv_heads = 2;
  EXPECT_THROW(c.validate(), ConfigError);  // head_dim 3
}

TEST(Attention, GroupIndex) {
  const auto c = model_preset("paper");
  EXPECT_EQ(kv_group_for_head(8, c), 1u);
  EXPECT_EQ(kv_group_for_head(31, c), 3u);
  EXPECT_EQ(kv_group_for_head(0, c), 0u);
}

TEST(Attention, MatchesNaiveMultiHead) {
  for (std::size_t kv : {4u, 2u, 1u}) {
    const auto c = tiny_config(4, kv);
    const auto p = init_params(c, 5);
    const auto x = random_input(2 * 6, c.hidden, 6);
    const auto got = oracle::to_mat(gqa_attention(x, p.layers[0], c, 2, 6));
    const auto want = oracle::naive_attention(oracle::to_mat(x), p.layers[0], c, 2, 6);
    for (std::size_t i = 0; i < got.size(); ++i)
      for (std::size_t j = 0; j < got[i].size(); ++j) EXPECT_NEAR(got[i][j], want[i][j], 1e-10) << kv;
  }
}

TEST(Attention, SinglePositionIsValueProjection) {
  const auto c = tiny_config(4, 2);
  const auto p = init_params(c, 8);
  const auto x = random_input(1, c.hidden, 9);
  const auto y = oracle::to_mat(gqa_attention(x, p.layers[0], c, 1, 1));
  // Softmax over one key: each head reads its group's value row.
  const auto v = oracle::matmul(oracle::to_mat(x), oracle::to_mat(p.layers[0].wv));
  const std::size_t hd = c.head_dim();
  oracle::Mat concat(1, std::vector<double>(c.hidden));
  for (std::size_t h = 0; h < c.n_heads; ++h)
    for (std::size_t d = 0; d < hd; ++d) concat[0][h * hd + d] = v[0][kv_group_for_head(h, c) * hd + d];
  const auto want = oracle::matmul(concat, oracle::to_mat(p.layers[0].wo));
  for (std::size_t j = 0; j < c.hidden; ++j) EXPECT_NEAR(y[0][j], want[0][j], 1e-14);
}

TEST(Mlp, ZeroGateAnnihilates) {
  const auto x = random_input(3, 4, 10);
  const auto y = swiglu_mlp(x, Tensor::zeros({4, 5}), random_input(4, 5, 11), random_input(5, 4, 12));
  for (double v : y.data()) EXPECT_EQ(v, 0.0);
}

TEST(Mlp, OneDimensional) {
  const auto one = Tensor::full({1, 1}, 1.0);
  const auto y = swiglu_mlp(one, one, one, one);
  EXPECT_NEAR(y.item(), 0.7310585786300049, 1e-15);
}

TEST(Mlp, GradientCheck) {
  tensor::OptionsScope scope({true, tensor::Precision::kFloat64, true});
  const auto x = random_input(3, 4, 13);
  std::vector<Tensor> params = {random_input(4, 6, 14).detach(true), random_input(4, 6, 15).detach(true),
                                random_input(6, 4, 16).detach(true)};
  const double err = tensor::finite_diff_check(
      [&] { return tensor::sum(tensor::mul(swiglu_mlp(x, params[0], params[1], params[2]), x)); }, params);
  EXPECT_LT(err, 1e-5);
}

TEST(Forward, CausalPrefixIsBitIdentical) {
  const auto c = tiny_config(4, 2);
  const auto p = init_params(c, 17);
  auto toks = random_tokens(10, c.vocab_size, 18);
  const auto base = forward(p, c, toks, 1, 10);
  for (std::size_t t = 0; t + 1 < 10; ++t) {
    auto changed = toks;
    for (std::size_t k = t + 1; k < 10; ++k) changed[k] = (changed[k] + 7) % static_cast<int>(c.vocab_size);
    const auto out = forward(p, c, changed, 1, 10);
    for (std::size_t i = 0; i < (t + 1) * c.vocab_size; ++i) ASSERT_EQ(out.at(i), base.at(i)) << t;
  }
}

TEST(Forward, Errors) {
  const auto c = tiny_config(4, 2);
  const auto p = init_params(c, 19);
  const std::vector<int> bad = {0, static_cast<int>(c.vocab_size)};
  EXPECT_THROW(forward(p, c, bad, 1, 2), Error);
  const auto long_seq = random_tokens(c.context_len + 1, c.vocab_size, 20);
  EXPECT_THROW(forward(p, c, long_seq, 1, c.context_len + 1), Error);
}

TEST(Forward, GradientCheckSmallConfig) {
  tensor::OptionsScope scope({true, tensor::Precision::kFloat64, true});
  const auto c = model_preset("gradcheck");
  auto p = init_params(c, 21);
  const auto toks = random_tokens(8, c.vocab_size, 22);
  const auto tgts = random_tokens(8, c.vocab_size, 23);
  const std::vector<std::uint8_t> mask(8, 1);
  auto tensors = p.tensors();
  const double err =
      tensor::finite_diff_check([&] { return lm_loss(forward(p, c, toks, 1, 8), tgts, mask); }, tensors);
  EXPECT_LT(err, 1e-4);
}

TEST(Forward, GradientCheckErrorIsTruncation) {
  // With weights scaled up the central difference loses accuracy, and the
  // gap shrinks like eps^2.
  tensor::OptionsScope scope({true, tensor::Precision::kFloat64, true});
  const auto c = model_preset("gradcheck");
  auto p = init_params(c, 7);
  for (auto& t : p.tensors())
    for (auto& v : t.mutable_data()) v *= 8.0;
  const auto toks = random_tokens(8, c.vocab_size, 24);
  const auto tgts = random_tokens(8, c.vocab_size, 25);
  const std::vector<std::uint8_t> mask(8, 1);
  auto tensors = p.tensors();
  const auto f = [&] { return lm_loss(forward(p, c, toks, 1, 8), tgts, mask); };
  const double coarse = tensor::finite_diff_check(f, tensors, 1e-4);
  const double fine = tensor::finite_diff_check(f, tensors, 1e-5);
  EXPECT_GT(coarse / fine, 50.0);
  EXPECT_LT(fine, 1e-3);
}

TEST(Loss, UniformLogits) {
  const auto logits = Tensor::zeros({1, 3, 31});
  const std::vector<int> tgts = {0, 5, 30};
  const std::vector<std::uint8_t> mask = {1, 1, 1};
  EXPECT_NEAR(lm_loss(logits, tgts, mask).item(), 3.4339872044851463, 1e-14);
}

TEST(Loss, HandCaseAndLimit) {
  const std::vector<int> tgt = {0};
  const std::vector<std::uint8_t> mask = {1};
  EXPECT_NEAR(lm_loss(Tensor::zeros({1, 1, 2}), tgt, mask).item(), std::log(2.0), 1e-15);
  EXPECT_LT(lm_loss(Tensor::from_data({1, 1, 2}, {60, -60}), tgt, mask).item(), 1e-40);
}

TEST(Loss, MaskSelectsPositions) {
  const auto logits = Tensor::from_data({1, 2, 2}, {0, 0, 5, -5});
  const std::vector<int> tgts = {0, 1};
  const std::vector<std::uint8_t> first = {1, 0};
  EXPECT_NEAR(lm_loss(logits, tgts, first).item(), std::log(2.0), 1e-15);
  const std::vector<std::uint8_t> none = {0, 0};
  EXPECT_THROW(lm_loss(logits, tgts, none), Error);
}

TEST(Params, UntiedAndCounted) {
  for (const char* name : {"micro", "gradcheck"}) {
    const auto c = model_preset(name);
    const auto p = init_params(c, 1);
    EXPECT_EQ(p.num_parameters(), c.num_parameters()) << name;
    EXPECT_NE(p.tok_embeddings.data().data(), p.lm_head.data().data());
    EXPECT_EQ(p.tok_embeddings.shape(), (tensor::Shape{c.vocab_size, c.hidden}));
    EXPECT_EQ(p.lm_head.shape(), (tensor::Shape{c.hidden, c.vocab_size}));
  }
  EXPECT_EQ(model_preset("micro").num_parameters(), 951424u);
  EXPECT_EQ(model_preset("paper").num_parameters(), 1324451840u);
}

TEST(Params, InitIsSeeded) {
  const auto c = model_preset("gradcheck");
  const auto a = init_params(c, 3), b = init_params(c, 3), d = init_params(c, 4);
  EXPECT_TRUE(std::equal(a.lm_head.data().begin(), a.lm_head.data().end(), b.lm_head.data().begin()));
  EXPECT_FALSE(std::equal(a.lm_head.data().begin(), a.lm_head.data().end(), d.lm_head.data().begin()));
  for (double g : a.final_norm.data()) EXPECT_EQ(g, 1.0);
  EXPECT_TRUE(is_decay_exempt("tok_embeddings"));
  EXPECT_TRUE(is_decay_exempt("layers.0.attn_norm"));
  EXPECT_FALSE(is_decay_exempt("lm_head"));
  EXPECT_FALSE(is_decay_exempt("layers.1.wq"));
}

TEST(Config, StrictJson) {
  const auto c = model_config_from_json(nlohmann::json{{"vocab_size", 77}});
  EXPECT_EQ(c.vocab_size, 77u);
  EXPECT_EQ(c.hidden, ModelConfig{}.hidden);
  try {
    model_config_from_json(nlohmann::json{{"n_head", 4}});
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("n_head"), std::string::npos);
  }
  EXPECT_THROW(model_config_from_json(nlohmann::json{{"hidden", "wide"}}), ConfigError);
  nlohmann::json j = model_preset("paper");
  EXPECT_EQ(model_config_from_json(j), model_preset("paper"));
}
