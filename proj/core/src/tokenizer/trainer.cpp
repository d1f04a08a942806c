#include "xmodel/tokenizer/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>

#include "xmodel/error.hpp"
#include "xmodel/tokenizer/lattice.hpp"
#include "xmodel/tokenizer/pretokenize.hpp"
#include "xmodel/util/utf8.hpp"

namespace xmodel::tokenizer {
namespace {

// Sentences per E-step work unit. Fixed so the reduction tree does not
// depend on the thread count.
constexpr std::size_t kChunkSize = 64;

TrainingCorpus from_counts(std::map<std::string, double>&& counts) {
  TrainingCorpus corpus;
  corpus.sentences.reserve(counts.size());
  for (auto& [s, w] : counts) corpus.sentences.emplace_back(s, w);
  return corpus;
}

std::vector<Piece> user_defined_pieces(const TokenizerConfig& config) {
  std::vector<Piece> out;
  for (std::size_t k = 2; k <= config.multispace_tokens; ++k) {
    out.push_back({std::string(k, ' '), 0.0, PieceKind::kUserDefined});
  }
  return out;
}

struct ChunkResult {
  std::vector<double> counts;
  double log_likelihood = 0.0;
};

ChunkResult run_chunk(const TrainingCorpus& corpus, const UnigramVocab& vocab, std::size_t chunk) {
  ChunkResult r;
  r.counts.assign(vocab.size(), 0.0);
  const std::size_t begin = chunk * kChunkSize;
  const std::size_t end = std::min(corpus.sentences.size(), begin + kChunkSize);
  for (std::size_t i = begin; i < end; ++i) {
    const auto& [s, w] = corpus.sentences[i];
    r.log_likelihood += w * forward_backward(vocab, s, w, r.counts);
  }
  return r;
}

void merge_into(ChunkResult& left, const ChunkResult& right) {
  for (std::size_t i = 0; i < left.counts.size(); ++i) left.counts[i] += right.counts[i];
  left.log_likelihood += right.log_likelihood;
}

// Binary-counter pairwise reduction: results must be pushed in chunk order.
class PairwiseReducer {
 public:
  void push(ChunkResult r) {
    std::size_t level = 0;
    while (!stack_.empty() && stack_.back().first == level) {
      ChunkResult left = std::move(stack_.back().second);
      stack_.pop_back();
      merge_into(left, r);
      r = std::move(left);
      ++level;
    }
    stack_.emplace_back(level, std::move(r));
  }
  ChunkResult finish(std::size_t vocab_size) {
    if (stack_.empty()) return ChunkResult{std::vector<double>(vocab_size, 0.0), 0.0};
    ChunkResult acc = std::move(stack_.back().second);
    stack_.pop_back();
    while (!stack_.empty()) {
      ChunkResult left = std::move(stack_.back().second);
      stack_.pop_back();
      merge_into(left, acc);
      acc = std::move(left);
    }
    return acc;
  }

 private:
  std::vector<std::pair<std::size_t, ChunkResult>> stack_;
};

std::vector<Piece> with_normal_logps(const UnigramVocab& vocab, const std::vector<double>& counts) {
  double total = 0.0;
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    if (vocab.piece(static_cast<int>(i)).kind == PieceKind::kNormal) total += counts[i];
  }
  std::vector<Piece> pieces = vocab.pieces();
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    if (pieces[i].kind != PieceKind::kNormal) continue;
    const double lp = counts[i] > 0.0 && total > 0.0 ? std::log(counts[i] / total) : kMinLogProb;
    pieces[i].logp = std::max(lp, kMinLogProb);
  }
  return pieces;
}

bool is_reserved_text(std::string_view s) {
  if (s == "<unk>" || s == "<s>" || s == "</s>" || s == "<pad>") return true;
  return s.size() == 6 && s.substr(0, 3) == "<0x" && s.back() == '>';
}

}  // namespace

// Splits every sentence at characters that have no single-character piece.
TrainingCorpus restrict_to_vocab(const TrainingCorpus& corpus, const UnigramVocab& vocab) {
  std::map<std::string, double> counts;
  for (const auto& [s, w] : corpus.sentences) {
    std::string fragment;
    for (auto ch : utf8::split_chars(s)) {
      const auto id = vocab.find(ch);
      if (id && vocab.piece(*id).kind == PieceKind::kNormal) {
        fragment.append(ch);
      } else if (!fragment.empty()) {
        counts[fragment] += w;
        fragment.clear();
      }
    }
    if (!fragment.empty()) counts[fragment] += w;
  }
  return from_counts(std::move(counts));
}

TrainingCorpus TrainingCorpus::from_strings(const std::vector<std::string>& strings) {
  std::map<std::string, double> counts;
  for (const auto& s : strings) counts[s] += 1.0;
  return from_counts(std::move(counts));
}

double TrainingCorpus::total_weight() const {
  double t = 0.0;
  for (const auto& [s, w] : sentences) t += w;
  return t;
}

TrainingCorpus build_training_corpus(const std::vector<std::string>& documents, const TokenizerConfig& config) {
  std::map<std::string, double> counts;
  const bool multispace = config.multispace_tokens >= 2;
  for (const auto& doc : documents) {
    for (auto& pre : normalize_and_pretokenize(doc, config)) {
      if (multispace && pre.size() >= 2 && is_space_run(pre)) {
        // Greedy multi-space pieces take everything but a lone trailing space.
        std::size_t rem = pre.size();
        while (rem >= 2) rem -= std::min(rem, config.multispace_tokens);
        if (rem == 1) counts[" "] += 1.0;
        continue;
      }
      counts[std::move(pre)] += 1.0;
    }
  }
  return from_counts(std::move(counts));
}

std::vector<std::string> required_characters(const TrainingCorpus& corpus, double coverage) {
  std::unordered_map<std::string, double> freq;
  double total = 0.0;
  for (const auto& [s, w] : corpus.sentences) {
    for (auto ch : utf8::split_chars(s)) {
      freq[std::string(ch)] += w;
      total += w;
    }
  }
  std::vector<std::pair<std::string, double>> ranked(freq.begin(), freq.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return utf8::decode(a.first)[0] < utf8::decode(b.first)[0];
  });
  std::vector<std::string> out;
  double covered = 0.0;
  for (auto& [ch, f] : ranked) {
    if (coverage < 1.0 && covered >= coverage * total) break;
    out.push_back(ch);
    covered += f;
  }
  return out;
}

UnigramVocab seed_vocabulary(const TrainingCorpus& corpus, const TokenizerConfig& config) {
  config.validate();
  if (corpus.sentences.empty() || corpus.total_weight() <= 0.0) {
    throw Error("seed_vocabulary: corpus is empty after normalization");
  }
  const auto required = required_characters(corpus, config.character_coverage);
  const std::unordered_set<std::string> required_set(required.begin(), required.end());

  std::unordered_map<std::string, double> char_freq;
  std::unordered_map<std::string, double> substrings;
  for (const auto& [s, w] : corpus.sentences) {
    const auto chars = utf8::split_chars(s);
    std::vector<char> ok(chars.size());
    for (std::size_t i = 0; i < chars.size(); ++i) {
      ok[i] = required_set.count(std::string(chars[i])) ? 1 : 0;
      if (ok[i]) char_freq[std::string(chars[i])] += w;
    }
    for (std::size_t i = 0; i < chars.size(); ++i) {
      if (!ok[i]) continue;
      std::size_t end_byte = static_cast<std::size_t>(chars[i].data() - s.data()) + chars[i].size();
      const std::size_t begin_byte = static_cast<std::size_t>(chars[i].data() - s.data());
      for (std::size_t len = 2; len <= config.max_piece_length && i + len - 1 < chars.size(); ++len) {
        const auto& last = chars[i + len - 1];
        if (!ok[i + len - 1]) break;
        end_byte = static_cast<std::size_t>(last.data() - s.data()) + last.size();
        substrings[s.substr(begin_byte, end_byte - begin_byte)] += w;
      }
    }
  }

  std::vector<Piece> pieces = UnigramVocab::reserved_pieces(config.byte_fallback);
  for (auto& p : user_defined_pieces(config)) pieces.push_back(std::move(p));
  std::unordered_set<std::string> taken;
  for (const auto& p : pieces) taken.insert(p.text);

  std::vector<std::pair<std::string, double>> scored;
  for (const auto& ch : required) {
    if (!taken.count(ch)) scored.emplace_back(ch, char_freq[ch]);
  }
  const auto budget_total = static_cast<std::size_t>(config.seed_multiplier * static_cast<double>(config.target_vocab_size));
  const std::size_t used = pieces.size() + scored.size();
  const std::size_t budget = budget_total > used ? budget_total - used : 0;

  std::vector<std::pair<std::string, double>> candidates;
  candidates.reserve(substrings.size());
  for (auto& [s, f] : substrings) {
    if (!taken.count(s) && !is_reserved_text(s)) candidates.emplace_back(s, f);
  }
  const auto order = [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    if (a.first.size() != b.first.size()) return a.first.size() > b.first.size();
    return a.first < b.first;
  };
  if (candidates.size() > budget) {
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(budget), candidates.end(),
                      order);
    candidates.resize(budget);
  } else {
    std::sort(candidates.begin(), candidates.end(), order);
  }
  for (auto& c : candidates) scored.push_back(std::move(c));

  double total = 0.0;
  for (const auto& [s, f] : scored) total += f;
  for (auto& [s, f] : scored) pieces.push_back({std::move(s), std::log(f / total), PieceKind::kNormal});
  return UnigramVocab(std::move(pieces));
}

std::vector<double> expected_counts(const TrainingCorpus& corpus, const UnigramVocab& vocab, double* log_likelihood,
                                    std::size_t num_threads) {
  const std::size_t chunks = (corpus.sentences.size() + kChunkSize - 1) / kChunkSize;
  num_threads = std::max<std::size_t>(1, num_threads);
  PairwiseReducer reducer;
  for (std::size_t base = 0; base < chunks; base += num_threads) {
    const std::size_t batch = std::min(num_threads, chunks - base);
    std::vector<ChunkResult> results(batch);
    if (batch == 1) {
      results[0] = run_chunk(corpus, vocab, base);
    } else {
      std::vector<std::thread> workers;
      std::vector<std::exception_ptr> errors(batch);
      for (std::size_t t = 0; t < batch; ++t) {
        workers.emplace_back([&, t] {
          try {
            results[t] = run_chunk(corpus, vocab, base + t);
          } catch (...) {
            errors[t] = std::current_exception();
          }
        });
      }
      for (auto& w : workers) w.join();
      for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
    }
    for (auto& r : results) reducer.push(std::move(r));
  }
  ChunkResult total = reducer.finish(vocab.size());
  if (log_likelihood) *log_likelihood = total.log_likelihood;
  return std::move(total.counts);
}

EmResult em_step(const TrainingCorpus& corpus, const UnigramVocab& vocab, std::size_t num_threads) {
  EmResult r;
  r.expected_counts = expected_counts(corpus, vocab, &r.log_likelihood, num_threads);
  r.vocab = UnigramVocab(with_normal_logps(vocab, r.expected_counts));
  return r;
}

std::size_t protected_piece_count(const UnigramVocab& vocab) {
  std::size_t n = 0;
  for (const auto& p : vocab.pieces()) {
    if (p.kind != PieceKind::kNormal || utf8::count_chars(p.text) == 1) ++n;
  }
  return n;
}

UnigramVocab prune_vocabulary(const TrainingCorpus& corpus, const UnigramVocab& vocab, const TokenizerConfig& config) {
  const std::size_t target = config.target_vocab_size;
  const std::size_t floor = protected_piece_count(vocab);
  if (target < floor) {
    throw ConfigError(fmt::format("prune_vocabulary: target {} is below the {} protected tokens", target, floor));
  }
  const std::size_t size = vocab.size();
  if (size <= target) return vocab;

  const std::vector<double> counts = expected_counts(corpus, vocab, nullptr, config.num_threads);
  struct Candidate {
    double utility;
    int id;
  };
  std::vector<Candidate> removable;
  for (std::size_t i = 0; i < size; ++i) {
    const Piece& p = vocab.piece(static_cast<int>(i));
    if (p.kind == PieceKind::kNormal && utf8::count_chars(p.text) > 1) {
      removable.push_back({-counts[i] * p.logp, static_cast<int>(i)});
    }
  }
  std::sort(removable.begin(), removable.end(), [](const Candidate& a, const Candidate& b) {
    if (a.utility != b.utility) return a.utility < b.utility;
    return a.id > b.id;
  });

  const auto shrunk = static_cast<std::size_t>(std::ceil(config.shrink_factor * static_cast<double>(size)));
  const std::size_t keep = std::max(target, shrunk);
  const std::size_t remove = size - keep;
  std::vector<char> dropped(size, 0);
  for (std::size_t k = 0; k < remove; ++k) dropped[static_cast<std::size_t>(removable[k].id)] = 1;

  std::vector<Piece> kept;
  kept.reserve(keep);
  double mass = 0.0;
  for (std::size_t i = 0; i < size; ++i) {
    if (dropped[i]) continue;
    kept.push_back(vocab.piece(static_cast<int>(i)));
    if (kept.back().kind == PieceKind::kNormal) mass += std::exp(kept.back().logp);
  }
  if (mass > 0.0) {
    const double log_mass = std::log(mass);
    for (auto& p : kept) {
      if (p.kind == PieceKind::kNormal) p.logp = std::max(p.logp - log_mass, kMinLogProb);
    }
  }
  return UnigramVocab(std::move(kept));
}

UnigramVocab train_unigram(const TrainingCorpus& corpus, const TokenizerConfig& config, TrainingTrace* trace) {
  config.validate();
  UnigramVocab vocab = seed_vocabulary(corpus, config);
  if (vocab.size() < config.target_vocab_size) {
    throw ConfigError(fmt::format("train_unigram: corpus yields only {} seed pieces, fewer than the target {}",
                                  vocab.size(), config.target_vocab_size));
  }
  const TrainingCorpus restricted = restrict_to_vocab(corpus, vocab);
  for (;;) {
    std::vector<double> round;
    for (int it = 0; it < config.em_iters_per_round; ++it) {
      EmResult r = em_step(restricted, vocab, config.num_threads);
      round.push_back(r.log_likelihood);
      vocab = std::move(r.vocab);
    }
    if (trace) {
      trace->log_likelihood.push_back(std::move(round));
      trace->vocab_sizes.push_back(vocab.size());
    }
    if (vocab.size() == config.target_vocab_size) break;
    vocab = prune_vocabulary(restricted, vocab, config);
  }
  return vocab;
}

}  // namespace xmodel::tokenizer
