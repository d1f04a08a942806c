#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "xmodel/tokenizer/vocab.hpp"

namespace xmodel::tokenizer {

// One token of a segmentation, as byte offsets into the segmented string.
// `unknown` marks a single character no normal piece covers; it is scored
// with UnigramVocab::unk_score() and counts as one token.
struct Segment {
  int id = -1;
  std::size_t begin = 0;
  std::size_t end = 0;
  bool unknown = false;
};

struct Segmentation {
  std::vector<Segment> segments;
  // Right fold of the segment scores: s1 + (s2 + (... + sk)).
  double score = 0.0;
};

// Path scores are compared as exact sums on a 2^-60 grid, so segmentations
// made of the same pieces in a different order tie exactly instead of
// depending on floating-point summation order.
__extension__ typedef __int128 ExactScore;
ExactScore exact_score(double logp);

// Maximum-score segmentation over normal pieces. Ties are broken by fewest
// tokens, then by preferring the longest first token, then the longest
// second token, and so on (leftmost-longest).
Segmentation viterbi(const UnigramVocab& vocab, std::string_view text);

// Forward-backward over the piece lattice. Adds weight * E[count(piece)] into
// `counts` (indexed by piece id, sized to vocab.size()) and returns
// log sum over segmentations of prod p(piece). Throws xmodel::Error naming the
// text and the first character no path can cross.
double forward_backward(const UnigramVocab& vocab, std::string_view text, double weight, std::vector<double>& counts);

// log(exp(a) + exp(b)) without overflow; -inf is the identity.
double log_add(double a, double b);

}  // namespace xmodel::tokenizer
