#include "xmodel/tokenizer/lattice.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "xmodel/error.hpp"

namespace xmodel::tokenizer {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Character start offsets plus the end offset, and the inverse map.
struct CharIndex {
  std::vector<std::size_t> offsets;
  std::vector<int> char_at_byte;

  explicit CharIndex(std::string_view s) : char_at_byte(s.size() + 1, -1) {
    for (std::size_t b = 0; b < s.size(); ++b) {
      if ((static_cast<unsigned char>(s[b]) & 0xC0) != 0x80) {
        char_at_byte[b] = static_cast<int>(offsets.size());
        offsets.push_back(b);
      }
    }
    char_at_byte[s.size()] = static_cast<int>(offsets.size());
    offsets.push_back(s.size());
  }
  std::size_t chars() const { return offsets.size() - 1; }
};

struct Best {
  double score = 0.0;
  ExactScore exact = 0;
  std::size_t tokens = 0;
  std::size_t next = 0;  // char index where the first token ends
  int id = -1;
  bool unknown = false;
  bool reachable = false;
};

// True if (score, tokens, len) beats the incumbent under the tie-break rule.
bool better(ExactScore score, std::size_t tokens, std::size_t len, const Best& cur, std::size_t cur_len) {
  if (!cur.reachable) return true;
  if (score != cur.exact) return score > cur.exact;
  if (tokens != cur.tokens) return tokens < cur.tokens;
  return len > cur_len;
}

}  // namespace

ExactScore exact_score(double logp) { return static_cast<ExactScore>(std::ldexp(logp, 60)); }

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  const double lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

Segmentation viterbi(const UnigramVocab& vocab, std::string_view text) {
  const CharIndex idx(text);
  const std::size_t n = idx.chars();
  std::vector<Best> best(n + 1);
  best[n].reachable = true;

  for (std::size_t i = n; i-- > 0;) {
    Best& cur = best[i];
    std::size_t cur_len = 0;
    bool single = false;
    vocab.for_each_prefix(text, idx.offsets[i], [&](int id, std::size_t end_byte) {
      const int j = idx.char_at_byte[end_byte];
      if (j < 0) return;
      const auto ju = static_cast<std::size_t>(j);
      if (ju == i + 1) single = true;
      const Best& rest = best[ju];
      if (!rest.reachable) return;
      const double logp = vocab.piece(id).logp;
      const ExactScore exact = exact_score(logp) + rest.exact;
      const std::size_t len = ju - i;
      if (better(exact, rest.tokens + 1, len, cur, cur_len)) {
        cur = Best{logp + rest.score, exact, rest.tokens + 1, ju, id, false, true};
        cur_len = len;
      }
    });
    if (!single) {
      const Best& rest = best[i + 1];
      const ExactScore exact = exact_score(vocab.unk_score()) + rest.exact;
      if (better(exact, rest.tokens + 1, 1, cur, cur_len)) {
        cur = Best{vocab.unk_score() + rest.score, exact, rest.tokens + 1, i + 1, vocab.unk_id().value_or(-1), true, true};
        cur_len = 1;
      }
    }
  }

  Segmentation seg;
  seg.score = best[0].score;
  for (std::size_t i = 0; i < n; i = best[i].next) {
    const Best& b = best[i];
    seg.segments.push_back(Segment{b.id, idx.offsets[i], idx.offsets[b.next], b.unknown});
  }
  return seg;
}

double forward_backward(const UnigramVocab& vocab, std::string_view text, double weight, std::vector<double>& counts) {
  const CharIndex idx(text);
  const std::size_t n = idx.chars();
  struct Edge {
    std::size_t from, to;
    int id;
  };
  std::vector<Edge> edges;
  std::vector<double> alpha(n + 1, kNegInf);
  alpha[0] = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (alpha[i] == kNegInf) continue;
    vocab.for_each_prefix(text, idx.offsets[i], [&](int id, std::size_t end_byte) {
      const int j = idx.char_at_byte[end_byte];
      if (j < 0) return;
      edges.push_back({i, static_cast<std::size_t>(j), id});
      alpha[static_cast<std::size_t>(j)] = log_add(alpha[static_cast<std::size_t>(j)], alpha[i] + vocab.piece(id).logp);
    });
  }
  const double log_z = alpha[n];
  if (log_z == kNegInf) {
    std::size_t stuck = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (alpha[i] != kNegInf) stuck = i;
    }
    const auto ch = text.substr(idx.offsets[stuck], idx.offsets[stuck + 1] - idx.offsets[stuck]);
    throw Error(fmt::format("cannot segment sentence '{}': no piece covers character '{}' at index {}", text, ch,
                            stuck));
  }

  std::vector<double> beta(n + 1, kNegInf);
  beta[n] = 0.0;
  for (auto it = edges.rbegin(); it != edges.rend(); ++it) {
    beta[it->from] = log_add(beta[it->from], vocab.piece(it->id).logp + beta[it->to]);
  }
  for (const Edge& e : edges) {
    const double lp = alpha[e.from] + vocab.piece(e.id).logp + beta[e.to] - log_z;
    if (lp == kNegInf) continue;
    counts[static_cast<std::size_t>(e.id)] += weight * std::exp(lp);
  }
  return log_z;
}

}  // namespace xmodel::tokenizer
