#include "xmodel/corpus/batching.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>

#include "xmodel/error.hpp"

namespace xmodel::corpus {

std::size_t TokenBatch::mask_sum() const { return std::accumulate(loss_mask.begin(), loss_mask.end(), std::size_t{0}); }

TokenBatch TokenBatch::rows(std::size_t begin, std::size_t count) const {
  if (begin + count > batch) throw Error(fmt::format("TokenBatch::rows: [{}, {}) outside {} rows", begin, begin + count, batch));
  TokenBatch out;
  out.batch = count;
  out.seq_len = seq_len;
  const auto lo = static_cast<std::ptrdiff_t>(begin * seq_len);
  const auto hi = static_cast<std::ptrdiff_t>((begin + count) * seq_len);
  out.tokens.assign(tokens.begin() + lo, tokens.begin() + hi);
  out.targets.assign(targets.begin() + lo, targets.begin() + hi);
  out.loss_mask.assign(loss_mask.begin() + lo, loss_mask.begin() + hi);
  if (!row_sources.empty()) {
    out.row_sources.assign(row_sources.begin() + static_cast<std::ptrdiff_t>(begin),
                           row_sources.begin() + static_cast<std::ptrdiff_t>(begin + count));
  }
  return out;
}

std::vector<TokenSource> tokenize_sources(const std::vector<Document>& docs,
                                          const tokenizer::TokenizerModel& tokenizer) {
  std::vector<TokenSource> out;
  for (const auto& d : docs) {
    auto it = std::find_if(out.begin(), out.end(), [&](const TokenSource& s) { return s.name == d.source; });
    if (it == out.end()) {
      out.push_back({d.source, {}});
      it = out.end() - 1;
    }
    it->docs.push_back(tokenizer.encode(d.text));
  }
  return out;
}

BatchSampler::BatchSampler(std::vector<TokenSource> sources, int bos_id, int eos_id, std::uint64_t seed,
                           bool wrap_around)
    : sources_(std::move(sources)), cursors_(sources_.size()), bos_(bos_id), eos_(eos_id), wrap_(wrap_around), rng_(seed) {
  for (const auto& s : sources_) {
    if (s.docs.empty()) throw Error(fmt::format("source \"{}\" has no documents", s.name));
  }
}

int BatchSampler::peek(std::size_t source, Cursor c) const {
  const auto& docs = sources_[source].docs;
  if (c.doc >= docs.size()) {
    throw Error(fmt::format("source \"{}\" is exhausted and wrap-around is off", sources_[source].name));
  }
  const auto& d = docs[c.doc];
  if (c.pos == 0) return bos_;
  if (c.pos <= d.size()) return d[c.pos - 1];
  return eos_;
}

void BatchSampler::advance(std::size_t source, Cursor& c) const {
  const auto& docs = sources_[source].docs;
  if (++c.pos < docs[c.doc].size() + 2) return;
  c.pos = 0;
  if (++c.doc == docs.size() && wrap_) {
    c.doc = 0;
    ++c.epochs;
  }
}

std::size_t BatchSampler::draw_source(const WeightMap& weights) {
  double total = 0.0;
  for (const auto& [name, w] : weights) {
    if (w < 0.0) throw Error(fmt::format("negative weight for source \"{}\"", name));
    total += w;
  }
  if (!(total > 0.0)) throw Error("mixture weights sum to 0");
  const double u = rng_.next_double() * total;
  double cum = 0.0;
  const std::string* chosen = nullptr;
  for (const auto& [name, w] : weights) {
    if (w <= 0.0) continue;
    chosen = &name;
    cum += w;
    if (u < cum) break;
  }
  for (std::size_t i = 0; i < sources_.size(); ++i) {
    if (sources_[i].name == *chosen) return i;
  }
  throw Error(fmt::format("mixture source \"{}\" has no data", *chosen));
}

TokenBatch BatchSampler::sample(const WeightMap& weights, std::size_t batch, std::size_t seq_len) {
  if (batch == 0 || seq_len == 0) throw Error("sample: batch and seq_len must be positive");
  TokenBatch out;
  out.batch = batch;
  out.seq_len = seq_len;
  out.tokens.resize(batch * seq_len);
  out.targets.resize(batch * seq_len);
  out.loss_mask.assign(batch * seq_len, 1);
  for (std::size_t b = 0; b < batch; ++b) {
    const std::size_t s = draw_source(weights);
    out.row_sources.push_back(sources_[s].name);
    Cursor& c = cursors_[s];
    for (std::size_t t = 0; t < seq_len; ++t) {
      out.tokens[b * seq_len + t] = peek(s, c);
      advance(s, c);
      out.targets[b * seq_len + t] = peek(s, c);
    }
  }
  return out;
}

nlohmann::json BatchSampler::state() const {
  nlohmann::json cursors = nlohmann::json::object();
  for (std::size_t i = 0; i < sources_.size(); ++i) {
    cursors[sources_[i].name] = {cursors_[i].doc, cursors_[i].pos, cursors_[i].epochs};
  }
  return {{"rng", rng_.state()}, {"cursors", cursors}};
}

void BatchSampler::set_state(const nlohmann::json& state) {
  try {
    rng_.set_state(state.at("rng").get<Rng::State>());
    const auto& cursors = state.at("cursors");
    for (std::size_t i = 0; i < sources_.size(); ++i) {
      const auto& c = cursors.at(sources_[i].name);
      cursors_[i] = {c.at(0).get<std::size_t>(), c.at(1).get<std::size_t>(), c.at(2).get<std::uint64_t>()};
      if (cursors_[i].doc > sources_[i].docs.size() ||
          (cursors_[i].doc < sources_[i].docs.size() && cursors_[i].pos >= sources_[i].docs[cursors_[i].doc].size() + 2)) {
        throw FormatError(fmt::format("sampler state: cursor out of range for source \"{}\"", sources_[i].name));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(fmt::format("sampler state: {}", e.what()));
  }
}

TokenBatch sft_batch(const std::vector<SftExample>& items, std::size_t seq_len, bool loss_on_full_sequence, int bos_id,
                     int eos_id, int pad_id) {
  if (items.empty() || seq_len == 0) throw Error("sft_batch: need at least one item and a positive seq_len");
  TokenBatch out;
  out.batch = items.size();
  out.seq_len = seq_len;
  out.tokens.assign(items.size() * seq_len, pad_id);
  out.targets.assign(items.size() * seq_len, pad_id);
  out.loss_mask.assign(items.size() * seq_len, 0);
  for (std::size_t b = 0; b < items.size(); ++b) {
    const auto& item = items[b];
    if (item.response.empty()) throw Error(fmt::format("sft_batch: item {} has an empty response", b));
    // Inputs are [bos] prompt response; targets add the final eos.
    if (item.response.size() + 1 > seq_len) {
      throw Error(fmt::format("sft_batch: item {} response has {} tokens, more than fits in seq_len {}", b,
                              item.response.size(), seq_len));
    }
    const std::size_t room = seq_len - 1 - item.response.size();
    const std::size_t p = std::min(room, item.prompt.size());
    std::vector<int> full;
    full.reserve(p + item.response.size() + 2);
    full.push_back(bos_id);
    full.insert(full.end(), item.prompt.end() - static_cast<std::ptrdiff_t>(p), item.prompt.end());
    full.insert(full.end(), item.response.begin(), item.response.end());
    full.push_back(eos_id);
    const std::size_t n = full.size() - 1;
    for (std::size_t t = 0; t < n; ++t) {
      out.tokens[b * seq_len + t] = full[t];
      out.targets[b * seq_len + t] = full[t + 1];
      const bool response_target = t >= p && t < p + item.response.size();
      out.loss_mask[b * seq_len + t] = loss_on_full_sequence || response_target ? 1 : 0;
    }
  }
  return out;
}

TokenBatch sft_batch(const std::vector<std::pair<std::string, std::string>>& items,
                     const tokenizer::TokenizerModel& tokenizer, std::size_t seq_len, bool loss_on_full_sequence) {
  std::vector<SftExample> ex;
  ex.reserve(items.size());
  for (const auto& [prompt, response] : items) ex.push_back({tokenizer.encode(prompt), tokenizer.encode(response)});
  return sft_batch(ex, seq_len, loss_on_full_sequence, tokenizer.bos_id(), tokenizer.eos_id(), tokenizer.pad_id());
}

}  // namespace xmodel::corpus
