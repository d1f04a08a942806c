#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "xmodel/corpus/ingest.hpp"

namespace xmodel::corpus {

// Word shingles used for fingerprinting: ASCII-lowercased text split on
// whitespace, consecutive words joined by one space. Fewer words than
// shingle_len gives a single shingle of all words; no words gives none.
std::vector<std::string> shingles(std::string_view text, std::size_t shingle_len = 3);

// Per-shingle hash: mix64(fnv1a64(shingle)).
std::uint64_t shingle_hash(std::string_view shingle);

// 64-bit SimHash: bit b is set when the count-weighted vote of the shingle
// hashes for bit b is positive.
std::uint64_t simhash(std::string_view text, std::size_t shingle_len = 3);

inline int hamming(std::uint64_t a, std::uint64_t b) { return __builtin_popcountll(a ^ b); }

struct Match {
  std::size_t index;  // insertion order of the matched fingerprint
  int distance;
};

// Band index over 64-bit fingerprints. With threshold k the fingerprint is
// cut into max(4, k+1) bands, so any pair within distance k shares a band
// and query() returns exactly what a linear scan would. Past 63 bands a
// linear scan is used.
class SimHashIndex {
 public:
  explicit SimHashIndex(int threshold);

  // Nearest inserted fingerprint within the threshold; ties go to the
  // earliest inserted.
  std::optional<Match> query(std::uint64_t fp) const;
  std::size_t insert(std::uint64_t fp);
  std::size_t size() const { return fps_.size(); }
  int threshold() const { return threshold_; }
  std::size_t num_bands() const { return bands_.size(); }

 private:
  struct Band {
    int shift;
    int width;
  };
  std::uint64_t key(std::size_t band, std::uint64_t fp) const;

  int threshold_;
  bool linear_ = false;
  std::vector<Band> bands_;
  std::vector<std::uint64_t> fps_;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> buckets_;
};

}  // namespace xmodel::corpus
