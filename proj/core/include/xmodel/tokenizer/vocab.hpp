#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace xmodel::tokenizer {

enum class PieceKind : std::uint8_t {
  kNormal,       // scored piece, takes part in the lattice
  kUnknown,      // <unk>
  kControl,      // <s>, </s>, <pad>
  kByte,         // <0xNN>
  kUserDefined,  // protected multi-space pieces, matched greedily
};

struct Piece {
  std::string text;
  double logp = 0.0;
  PieceKind kind = PieceKind::kNormal;
};

// Log-probability assigned to pieces that received no expected count. It is
// finite, and exp() of it underflows to exactly 0 so normalization holds.
inline constexpr double kMinLogProb = -1000.0;

// Penalty below the lowest piece score for a character no piece covers.
inline constexpr double kUnknownPenalty = 10.0;

// Ordered piece inventory with a byte trie for prefix matching. Immutable
// after construction; build a new vocab to change it.
class UnigramVocab {
 public:
  static constexpr int kUnkId = 0;
  static constexpr int kBosId = 1;
  static constexpr int kEosId = 2;
  static constexpr int kPadId = 3;
  static constexpr int kFirstByteId = 4;
  static constexpr int kNumReserved = 4;

  UnigramVocab() = default;
  // Pieces are taken in id order. Throws on duplicate strings.
  explicit UnigramVocab(std::vector<Piece> pieces);

  // Specials at ids 0..3 and, if requested, <0x00>..<0xFF> at 4..259.
  static std::vector<Piece> reserved_pieces(bool byte_fallback);
  static std::string byte_piece_text(std::uint8_t b);

  std::size_t size() const { return pieces_.size(); }
  const Piece& piece(int id) const { return pieces_.at(static_cast<std::size_t>(id)); }
  const std::vector<Piece>& pieces() const { return pieces_; }
  std::optional<int> find(std::string_view text) const;

  bool has_byte_fallback() const { return has_bytes_; }
  int byte_id(std::uint8_t b) const { return kFirstByteId + b; }
  bool is_byte(int id) const { return pieces_.at(static_cast<std::size_t>(id)).kind == PieceKind::kByte; }
  std::optional<int> unk_id() const { return unk_id_; }

  // Score used for an uncovered character: min normal logp - kUnknownPenalty.
  double unk_score() const { return unk_score_; }
  // Longest normal/user piece, in characters.
  std::size_t max_piece_chars() const { return max_chars_; }

  // Calls fn(piece_id, end_byte) for every normal piece that matches
  // s.substr(begin) ending on a character boundary. Ends are visited in
  // increasing order.
  template <typename Fn>
  void for_each_prefix(std::string_view s, std::size_t begin, Fn&& fn) const;

  // Ids of user-defined pieces.
  std::vector<int> user_defined_ids() const;

  // Sum of exp(logp) over normal pieces.
  double normal_mass() const;

 private:
  struct TrieEdgeHash {
    std::size_t operator()(std::uint64_t k) const noexcept { return std::hash<std::uint64_t>{}(k * 0x9e3779b97f4a7c15ULL); }
  };
  int child(int node, unsigned char byte) const {
    auto it = edges_.find((static_cast<std::uint64_t>(node) << 8) | byte);
    return it == edges_.end() ? -1 : it->second;
  }

  std::vector<Piece> pieces_;
  std::unordered_map<std::string, int> index_;
  // Trie over normal pieces only.
  std::unordered_map<std::uint64_t, int, TrieEdgeHash> edges_;
  std::vector<int> terminal_;  // node -> piece id or -1
  bool has_bytes_ = false;
  std::optional<int> unk_id_;
  double unk_score_ = -kUnknownPenalty;
  std::size_t max_chars_ = 0;
};

template <typename Fn>
void UnigramVocab::for_each_prefix(std::string_view s, std::size_t begin, Fn&& fn) const {
  int node = 0;
  for (std::size_t i = begin; i < s.size(); ++i) {
    node = child(node, static_cast<unsigned char>(s[i]));
    if (node < 0) return;
    const int id = terminal_[static_cast<std::size_t>(node)];
    if (id >= 0) fn(id, i + 1);
  }
}

}  // namespace xmodel::tokenizer
