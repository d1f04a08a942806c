#include <benchmark/benchmark.h>

#include "xmodel/model/params.hpp"
#include "xmodel/model/transformer.hpp"
#include "xmodel/tensor/autograd.hpp"
#include "xmodel/util/rng.hpp"

using namespace xmodel;

namespace {

std::vector<int> tokens(std::size_t n, std::size_t vocab) {
  Rng rng(5);
  std::vector<int> t(n);
  for (auto& x : t) x = static_cast<int>(rng.uniform(vocab));
  return t;
}

// Micro config, [batch 4, seq range(0)].
void BM_Forward(benchmark::State& state) {
  const auto c = model::model_preset("micro");
  const auto p = model::init_params(c, 1);
  const auto seq = static_cast<std::size_t>(state.range(0));
  const auto t = tokens(4 * seq, c.vocab_size);
  tensor::NoGradScope no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(model::forward(p, c, t, 4, seq));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(4 * seq));
}
BENCHMARK(BM_Forward)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_ForwardBackward(benchmark::State& state) {
  const auto c = model::model_preset("micro");
  auto p = model::init_params(c, 1);
  const auto seq = static_cast<std::size_t>(state.range(0));
  const auto t = tokens(4 * seq, c.vocab_size);
  const auto y = tokens(4 * seq, c.vocab_size);
  const std::vector<std::uint8_t> mask(t.size(), 1);
  for (auto _ : state) {
    p.zero_grad();
    benchmark::DoNotOptimize(tensor::backward(model::lm_loss(model::forward(p, c, t, 4, seq), y, mask)));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(4 * seq));
}
BENCHMARK(BM_ForwardBackward)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

}  // namespace
