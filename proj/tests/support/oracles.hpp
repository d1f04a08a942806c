#pragma once

// Independent reference implementations the unit and acceptance tests
// compare the library against. Deliberately naive.

#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "xmodel/corpus/dedup.hpp"
#include "xmodel/corpus/simhash.hpp"
#include "xmodel/eval/harness.hpp"
#include "xmodel/model/config.hpp"
#include "xmodel/model/params.hpp"
#include "xmodel/tokenizer/vocab.hpp"
#include "xmodel/util/hash.hpp"
#include "xmodel/util/rng.hpp"
#include "xmodel/util/utf8.hpp"

namespace oracle {

// ---- segmentation ----------------------------------------------------------

struct Seg {
  std::vector<std::tuple<int, std::size_t, std::size_t, bool>> pieces;  // id, begin, end (bytes), unknown
  double score = 0.0;
};

// Every segmentation of `text` over normal pieces, plus single-character
// unknown edges where no single-character piece exists; keeps the best by
// (exact score desc, tokens asc, piece lengths lexicographically desc).
// Exact scores are sums of logp * 2^60 in 128-bit integers, so reorderings
// of the same pieces tie.
inline Seg exhaustive_viterbi(const xmodel::tokenizer::UnigramVocab& vocab, const std::string& text) {
  using xmodel::tokenizer::PieceKind;
  std::vector<std::size_t> off;  // byte offset of each char, plus end
  for (std::size_t i = 0; i < text.size();) {
    off.push_back(i);
    i += xmodel::utf8::sequence_length(static_cast<unsigned char>(text[i]));
  }
  const std::size_t n = off.size();
  off.push_back(text.size());

  struct Edge {
    std::size_t to;
    int id;
    double score;
    bool unknown;
  };
  std::vector<std::vector<Edge>> edges(n);
  for (std::size_t i = 0; i < n; ++i) {
    bool single = false;
    for (std::size_t j = i + 1; j <= n; ++j) {
      const std::string sub = text.substr(off[i], off[j] - off[i]);
      for (std::size_t id = 0; id < vocab.size(); ++id) {
        const auto& p = vocab.piece(static_cast<int>(id));
        if (p.kind == PieceKind::kNormal && p.text == sub) {
          edges[i].push_back({j, static_cast<int>(id), p.logp, false});
          if (j == i + 1) single = true;
        }
      }
    }
    if (!single) edges[i].push_back({i + 1, vocab.unk_id().value_or(-1), vocab.unk_score(), true});
  }

  __extension__ typedef __int128 i128;
  std::optional<Seg> best;
  i128 best_exact = 0;
  std::vector<std::size_t> best_lens;
  std::vector<Edge> path;
  std::function<void(std::size_t)> walk = [&](std::size_t i) {
    if (i == n) {
      double score = 0.0;
      i128 exact = 0;
      for (std::size_t k = path.size(); k-- > 0;) {
        score = path[k].score + score;  // right fold
        exact += static_cast<i128>(std::ldexp(path[k].score, 60));
      }
      std::vector<std::size_t> lens;
      std::size_t at = 0;
      for (const auto& e : path) {
        lens.push_back(e.to - at);
        at = e.to;
      }
      bool take = !best;
      if (!take) {
        if (exact != best_exact) {
          take = exact > best_exact;
        } else if (path.size() != best->pieces.size()) {
          take = path.size() < best->pieces.size();
        } else {
          take = lens > best_lens;
        }
      }
      if (take) {
        Seg s;
        s.score = score;
        std::size_t from = 0;
        for (const auto& e : path) {
          s.pieces.emplace_back(e.id, off[from], off[e.to], e.unknown);
          from = e.to;
        }
        best = s;
        best_exact = exact;
        best_lens = lens;
      }
      return;
    }
    for (const auto& e : edges[i]) {
      path.push_back(e);
      walk(e.to);
      path.pop_back();
    }
  };
  walk(0);
  return *best;
}

// ---- dedup -----------------------------------------------------------------

// Streaming greedy dedup from an all-pairs distance table: a document is
// dropped if some earlier kept document of its source is within the
// threshold; the match is the nearest, earliest on ties.
inline std::set<std::tuple<std::string, std::string, int>> brute_force_drops(
    const std::vector<xmodel::corpus::Document>& docs, const xmodel::corpus::DedupConfig& cfg) {
  const std::size_t n = docs.size();
  std::vector<std::uint64_t> fp(n);
  for (std::size_t i = 0; i < n; ++i) fp[i] = xmodel::corpus::simhash(docs[i].text, cfg.shingle_len);
  std::vector<std::vector<int>> dist(n, std::vector<int>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) dist[i][j] = __builtin_popcountll(fp[i] ^ fp[j]);
  std::vector<bool> kept(n, false);
  std::set<std::tuple<std::string, std::string, int>> drops;
  for (std::size_t i = 0; i < n; ++i) {
    if (!cfg.applies_to(docs[i].source)) {
      kept[i] = true;
      continue;
    }
    std::optional<std::size_t> match;
    for (std::size_t j = 0; j < i; ++j) {
      if (!kept[j] || docs[j].source != docs[i].source || dist[i][j] > cfg.hamming_threshold) continue;
      if (!match || dist[i][j] < dist[i][*match]) match = j;
    }
    if (match) {
      drops.emplace(docs[i].id, docs[*match].id, dist[i][*match]);
    } else {
      kept[i] = true;
    }
  }
  return drops;
}

// ---- attention ---------------------------------------------------------------

using Mat = std::vector<std::vector<double>>;

inline Mat to_mat(const xmodel::tensor::Tensor& t) {
  Mat m(t.dim(0), std::vector<double>(t.dim(1)));
  for (std::size_t i = 0; i < t.dim(0); ++i)
    for (std::size_t j = 0; j < t.dim(1); ++j) m[i][j] = t.at(i * t.dim(1) + j);
  return m;
}

inline Mat matmul(const Mat& a, const Mat& b) {
  Mat c(a.size(), std::vector<double>(b[0].size(), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < b.size(); ++k)
      for (std::size_t j = 0; j < b[0].size(); ++j) c[i][j] += a[i][k] * b[k][j];
  return c;
}

// Rotates pairs (2i, 2i+1) of each head-slice in place.
inline void rope_rows(Mat& m, std::size_t heads, std::size_t hd, std::size_t seq, double base) {
  for (std::size_t r = 0; r < m.size(); ++r) {
    const double pos = static_cast<double>(r % seq);
    for (std::size_t h = 0; h < heads; ++h) {
      for (std::size_t i = 0; i < hd / 2; ++i) {
        const double theta = pos * std::pow(base, -2.0 * static_cast<double>(i) / static_cast<double>(hd));
        double& x = m[r][h * hd + 2 * i];
        double& y = m[r][h * hd + 2 * i + 1];
        const double nx = x * std::cos(theta) - y * std::sin(theta);
        const double ny = x * std::sin(theta) + y * std::cos(theta);
        x = nx;
        y = ny;
      }
    }
  }
}

// Plain loops: per (batch, head), causal softmax(q k^T / sqrt(d)) v, kv head
// for query head h is h / (n_heads / n_kv_heads).
inline Mat naive_attention(const Mat& x, const xmodel::model::LayerParams& l, const xmodel::model::ModelConfig& c,
                           std::size_t batch, std::size_t seq) {
  const std::size_t hd = c.hidden / c.n_heads;
  Mat q = matmul(x, to_mat(l.wq)), k = matmul(x, to_mat(l.wk)), v = matmul(x, to_mat(l.wv));
  rope_rows(q, c.n_heads, hd, seq, c.rope_base);
  rope_rows(k, c.n_kv_heads, hd, seq, c.rope_base);
  Mat out(x.size(), std::vector<double>(c.hidden, 0.0));
  const std::size_t group = c.n_heads / c.n_kv_heads;
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t h = 0; h < c.n_heads; ++h) {
      const std::size_t kvh = h / group;
      for (std::size_t i = 0; i < seq; ++i) {
        std::vector<double> s(i + 1);
        double mx = -1e300;
        for (std::size_t j = 0; j <= i; ++j) {
          double d = 0.0;
          for (std::size_t e = 0; e < hd; ++e) d += q[b * seq + i][h * hd + e] * k[b * seq + j][kvh * hd + e];
          s[j] = d / std::sqrt(static_cast<double>(hd));
          mx = std::max(mx, s[j]);
        }
        double z = 0.0;
        for (auto& w : s) z += (w = std::exp(w - mx));
        for (std::size_t j = 0; j <= i; ++j)
          for (std::size_t e = 0; e < hd; ++e) out[b * seq + i][h * hd + e] += s[j] / z * v[b * seq + j][kvh * hd + e];
      }
    }
  }
  return matmul(out, to_mat(l.wo));
}

// ---- eval stubs ---------------------------------------------------------------

// Bytes shifted by 3; 0 = pad, 1 = bos, 2 = eos.
class ByteCodec : public xmodel::eval::Codec {
 public:
  std::vector<int> encode(std::string_view text) const override {
    std::vector<int> ids;
    for (unsigned char c : text) ids.push_back(c + 3);
    return ids;
  }
  std::string decode(std::span<const int> ids) const override {
    std::string s;
    for (int id : ids)
      if (id >= 3) s += static_cast<char>(id - 3);
    return s;
  }
  int bos_id() const override { return 1; }
  int eos_id() const override { return 2; }
};

// Emits " X" after the final "Answer:" and then eos. The letter comes from
// `choose(context_text)`.
class LetterStub : public xmodel::eval::LanguageModel {
 public:
  std::size_t vocab_size() const override { return 259; }
  std::size_t context_len() const override { return std::size_t{1} << 24; }
  std::vector<double> next_logprobs(std::span<const int> context) override {
    const std::string text = codec_.decode(context);
    int next = 2;
    if (text.ends_with("Answer:")) {
      next = ' ' + 3;
    } else if (text.ends_with("Answer: ")) {
      next = choose(text) + 3;
    }
    std::vector<double> lp(259, -50.0);
    lp[static_cast<std::size_t>(next)] = 0.0;
    return lp;
  }

 protected:
  virtual char choose(const std::string& text) = 0;
  ByteCodec codec_;
};

// Knows every item's correct option text and reads the letter it was shown at.
class OracleStub : public LetterStub {
 public:
  explicit OracleStub(std::span<const xmodel::eval::EvalItem> items) {
    for (const auto& it : items) answers_[it.question] = it.options[static_cast<std::size_t>(it.correct_index)];
  }

 protected:
  char choose(const std::string& text) override {
    const auto q = text.rfind("Question: ");
    const auto q_end = text.find('\n', q);
    const std::string question = text.substr(q + 10, q_end - q - 10);
    const std::string& answer = answers_.at(question);
    for (char letter : {'A', 'B', 'C', 'D'}) {
      const std::string line = std::string("\n") + letter + ". " + answer + "\n";
      if (text.find(line, q) != std::string::npos) return letter;
    }
    return '?';
  }

 private:
  std::map<std::string, std::string> answers_;
};

// Uniform letter from a hash of the whole prompt.
class RandomStub : public LetterStub {
 public:
  explicit RandomStub(std::uint64_t seed) : seed_(seed) {}

 protected:
  char choose(const std::string& text) override {
    xmodel::Rng rng = xmodel::Rng::derive(seed_, text);
    return "ABCD"[rng.uniform(4)];
  }

 private:
  std::uint64_t seed_;
};

// ---- misc --------------------------------------------------------------------

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("xmodel_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace oracle
