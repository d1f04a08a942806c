#include <benchmark/benchmark.h>

#include "xmodel/corpus/dedup.hpp"
#include "xmodel/corpus/simhash.hpp"
#include "xmodel/fixtures.hpp"

using namespace xmodel;

namespace {

void BM_SimHash(benchmark::State& state) {
  const auto docs = fixtures::multilingual_corpus(100, 2);
  std::size_t bytes = 0;
  for (const auto& d : docs) bytes += d.text.size();
  for (auto _ : state)
    for (const auto& d : docs) benchmark::DoNotOptimize(corpus::simhash(d.text));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(bytes));
}
BENCHMARK(BM_SimHash);

void BM_IndexQuery(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  corpus::SimHashIndex index(k);
  Rng rng(4);
  for (int i = 0; i < 100000; ++i) index.insert(rng.next_u64());
  for (auto _ : state) benchmark::DoNotOptimize(index.query(rng.next_u64()));
}
BENCHMARK(BM_IndexQuery)->Arg(3)->Arg(8)->Arg(12);

void BM_Dedup(benchmark::State& state) {
  const auto docs = fixtures::multilingual_corpus(2000, 3);
  for (auto _ : state) benchmark::DoNotOptimize(corpus::dedup(docs, {3, 3, "", true}));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(docs.size()));
}
BENCHMARK(BM_Dedup)->Unit(benchmark::kMillisecond);

}  // namespace
