#include <benchmark/benchmark.h>

#include "xmodel/tensor/autograd.hpp"
#include "xmodel/tensor/ops.hpp"
#include "xmodel/util/rng.hpp"

using namespace xmodel;
using tensor::Tensor;

namespace {

Tensor random(std::size_t r, std::size_t c, std::uint64_t seed, bool grad = false) {
  Rng rng(seed);
  std::vector<double> v(r * c);
  for (auto& x : v) x = rng.normal();
  return Tensor::from_data({r, c}, std::move(v), grad);
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random(n, n, 1), b = random(n, n, 2);
  tensor::NoGradScope no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(tensor::matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(128)->Arg(256);

void BM_SoftmaxBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    auto x = random(n, n, 3, true);
    benchmark::DoNotOptimize(tensor::backward(tensor::sum(tensor::mul(tensor::softmax_lastdim(x), x))));
  }
}
BENCHMARK(BM_SoftmaxBackward)->Arg(64)->Arg(256);

}  // namespace
