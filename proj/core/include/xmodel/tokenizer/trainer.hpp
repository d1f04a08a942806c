#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "xmodel/tokenizer/config.hpp"
#include "xmodel/tokenizer/vocab.hpp"

namespace xmodel::tokenizer {

// Distinct training strings with their (possibly fractional) frequencies,
// sorted by string so that reductions run in a fixed order.
struct TrainingCorpus {
  std::vector<std::pair<std::string, double>> sentences;

  static TrainingCorpus from_strings(const std::vector<std::string>& strings);
  double total_weight() const;
};

// Pretokenizes raw documents and counts the distinct pretokens. All-space
// runs that map onto user-defined multi-space pieces are left out, as they
// never go through the lattice.
TrainingCorpus build_training_corpus(const std::vector<std::string>& documents, const TokenizerConfig& config);

// Characters kept as single-character pieces: the most frequent characters
// whose cumulative share first reaches `coverage`, in frequency order (ties
// by code point).
std::vector<std::string> required_characters(const TrainingCorpus& corpus, double coverage);

// Oversized starting vocabulary: reserved tokens, multi-space pieces, the
// required characters, then the most frequent substrings (2..max_piece_length
// characters, made only of required characters) up to
// seed_multiplier * target_vocab_size entries in total. Log-probabilities
// are relative frequencies. Throws on an empty corpus.
UnigramVocab seed_vocabulary(const TrainingCorpus& corpus, const TokenizerConfig& config);

// Splits every sentence at characters that are not normal single-character
// pieces of `vocab` (those are reachable only through bytes or <unk>),
// keeping the covered fragments with their weights.
TrainingCorpus restrict_to_vocab(const TrainingCorpus& corpus, const UnigramVocab& vocab);

struct EmResult {
  UnigramVocab vocab;
  // Corpus log-likelihood under the *input* vocab.
  double log_likelihood = 0.0;
  // Expected piece counts under the input vocab, indexed by piece id.
  std::vector<double> expected_counts;
};

// E-step (lattice forward-backward) then M-step (renormalized counts).
// Chunks of sentences are reduced in a fixed pairwise tree, so the result
// is bit-identical for any `num_threads`.
EmResult em_step(const TrainingCorpus& corpus, const UnigramVocab& vocab, std::size_t num_threads = 1);

// E-step only.
std::vector<double> expected_counts(const TrainingCorpus& corpus, const UnigramVocab& vocab,
                                    double* log_likelihood = nullptr, std::size_t num_threads = 1);

// Number of pieces pruning may never remove (reserved, byte, user-defined
// and single-character pieces).
std::size_t protected_piece_count(const UnigramVocab& vocab);

// One prune round: keeps max(target, ceil(shrink_factor * size)) entries,
// removing the removable pieces with the smallest utility
// -expected_count * logp (ties: later id first). Normal-piece probabilities
// are renormalized. A vocab already at target is returned unchanged.
UnigramVocab prune_vocabulary(const TrainingCorpus& corpus, const UnigramVocab& vocab, const TokenizerConfig& config);

struct TrainingTrace {
  // One entry per prune round; each holds the log-likelihoods of that
  // round's EM iterations.
  std::vector<std::vector<double>> log_likelihood;
  std::vector<std::size_t> vocab_sizes;
};

// Seeds, then alternates em_iters_per_round EM steps with one prune round
// until the vocab has exactly target_vocab_size entries, then runs a final
// round of EM steps.
UnigramVocab train_unigram(const TrainingCorpus& corpus, const TokenizerConfig& config, TrainingTrace* trace = nullptr);

}  // namespace xmodel::tokenizer
