#include "xmodel/corpus/simhash.hpp"

#include <algorithm>
#include <map>

#include <fmt/format.h>

#include "xmodel/error.hpp"
#include "xmodel/util/hash.hpp"

namespace xmodel::corpus {
namespace {

bool is_ascii_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

}  // namespace

std::vector<std::string> shingles(std::string_view text, std::size_t shingle_len) {
  if (shingle_len == 0) throw Error("shingles: shingle_len must be positive");
  std::vector<std::string> words;
  std::string cur;
  for (unsigned char c : text) {
    if (is_ascii_space(c)) {
      if (!cur.empty()) words.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));

  std::vector<std::string> out;
  if (words.empty()) return out;
  const std::size_t n = words.size() < shingle_len ? 1 : words.size() - shingle_len + 1;
  const std::size_t len = std::min(shingle_len, words.size());
  for (std::size_t i = 0; i < n; ++i) {
    std::string s = words[i];
    for (std::size_t k = 1; k < len; ++k) {
      s += ' ';
      s += words[i + k];
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::uint64_t shingle_hash(std::string_view shingle) { return mix64(fnv1a64(shingle)); }

std::uint64_t simhash(std::string_view text, std::size_t shingle_len) {
  std::map<std::string, std::int64_t> counts;
  for (auto& s : shingles(text, shingle_len)) ++counts[std::move(s)];
  std::int64_t votes[64] = {};
  for (const auto& [s, c] : counts) {
    const std::uint64_t h = shingle_hash(s);
    for (int b = 0; b < 64; ++b) votes[b] += (h >> b) & 1 ? c : -c;
  }
  std::uint64_t fp = 0;
  for (int b = 0; b < 64; ++b) {
    if (votes[b] > 0) fp |= std::uint64_t{1} << b;
  }
  return fp;
}

SimHashIndex::SimHashIndex(int threshold) : threshold_(threshold) {
  if (threshold < 0 || threshold > 64) throw ConfigError(fmt::format("hamming threshold {} outside [0, 64]", threshold));
  const int nb = std::max(4, threshold + 1);
  if (nb > 64) {
    linear_ = true;
    return;
  }
  int shift = 0;
  for (int b = 0; b < nb; ++b) {
    const int width = 64 / nb + (b < 64 % nb ? 1 : 0);
    bands_.push_back({shift, width});
    shift += width;
  }
}

std::uint64_t SimHashIndex::key(std::size_t band, std::uint64_t fp) const {
  const Band& b = bands_[band];
  const std::uint64_t mask = b.width == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << b.width) - 1;
  // Widths are at most 16 bits.
  return (static_cast<std::uint64_t>(band) << 16) | ((fp >> b.shift) & mask);
}

std::optional<Match> SimHashIndex::query(std::uint64_t fp) const {
  std::optional<Match> best;
  const auto consider = [&](std::size_t i) {
    const int d = hamming(fp, fps_[i]);
    if (d > threshold_) return;
    if (!best || d < best->distance || (d == best->distance && i < best->index)) best = Match{i, d};
  };
  if (linear_) {
    for (std::size_t i = 0; i < fps_.size(); ++i) consider(i);
    return best;
  }
  for (std::size_t b = 0; b < bands_.size(); ++b) {
    auto it = buckets_.find(key(b, fp));
    if (it == buckets_.end()) continue;
    for (std::uint32_t i : it->second) consider(i);
  }
  return best;
}

std::size_t SimHashIndex::insert(std::uint64_t fp) {
  const std::size_t i = fps_.size();
  fps_.push_back(fp);
  if (!linear_) {
    for (std::size_t b = 0; b < bands_.size(); ++b) buckets_[key(b, fp)].push_back(static_cast<std::uint32_t>(i));
  }
  return i;
}

}  // namespace xmodel::corpus
