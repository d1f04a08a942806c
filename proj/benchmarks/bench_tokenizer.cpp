#include <benchmark/benchmark.h>

#include "xmodel/fixtures.hpp"
#include "xmodel/tokenizer/tokenizer.hpp"

using namespace xmodel;

namespace {

const tokenizer::TokenizerModel& desk_model() {
  static const auto model = [] {
    std::vector<std::string> docs;
    for (const auto& d : fixtures::multilingual_corpus(400, 0)) docs.push_back(d.text);
    return tokenizer::TokenizerModel::train(docs, fixtures::desk_tokenizer_config());
  }();
  return model;
}

void BM_Encode(benchmark::State& state) {
  const auto& model = desk_model();
  const auto texts = fixtures::heldout_texts(50, 1);
  std::size_t bytes = 0;
  for (const auto& t : texts) bytes += t.size();
  for (auto _ : state)
    for (const auto& t : texts) benchmark::DoNotOptimize(model.encode(t));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(bytes));
}
BENCHMARK(BM_Encode);

void BM_Decode(benchmark::State& state) {
  const auto& model = desk_model();
  std::vector<std::vector<int>> ids;
  for (const auto& t : fixtures::heldout_texts(50, 1)) ids.push_back(model.encode(t));
  for (auto _ : state)
    for (const auto& i : ids) benchmark::DoNotOptimize(model.decode(i));
}
BENCHMARK(BM_Decode);

void BM_TrainTokenizer(benchmark::State& state) {
  std::vector<std::string> docs;
  for (const auto& d : fixtures::multilingual_corpus(200, 0)) docs.push_back(d.text);
  auto cfg = fixtures::desk_tokenizer_config();
  cfg.target_vocab_size = 512;
  for (auto _ : state) benchmark::DoNotOptimize(tokenizer::TokenizerModel::train(docs, cfg));
}
BENCHMARK(BM_TrainTokenizer)->Unit(benchmark::kMillisecond);

}  // namespace
