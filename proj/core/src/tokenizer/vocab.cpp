#include "xmodel/tokenizer/vocab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "xmodel/error.hpp"
#include "xmodel/util/utf8.hpp"

namespace xmodel::tokenizer {

std::string UnigramVocab::byte_piece_text(std::uint8_t b) { return fmt::format("<0x{:02X}>", b); }

std::vector<Piece> UnigramVocab::reserved_pieces(bool byte_fallback) {
  std::vector<Piece> out = {
      {"<unk>", 0.0, PieceKind::kUnknown},
      {"<s>", 0.0, PieceKind::kControl},
      {"</s>", 0.0, PieceKind::kControl},
      {"<pad>", 0.0, PieceKind::kControl},
  };
  if (byte_fallback) {
    for (int b = 0; b < 256; ++b) out.push_back({byte_piece_text(static_cast<std::uint8_t>(b)), 0.0, PieceKind::kByte});
  }
  return out;
}

UnigramVocab::UnigramVocab(std::vector<Piece> pieces) : pieces_(std::move(pieces)) {
  index_.reserve(pieces_.size());
  terminal_.push_back(-1);
  double min_logp = std::numeric_limits<double>::infinity();
  for (std::size_t id = 0; id < pieces_.size(); ++id) {
    const Piece& p = pieces_[id];
    if (p.text.empty()) throw FormatError(fmt::format("vocab: piece {} is empty", id));
    if (!index_.emplace(p.text, static_cast<int>(id)).second) {
      throw FormatError(fmt::format("vocab: duplicate piece '{}' at id {}", p.text, id));
    }
    switch (p.kind) {
      case PieceKind::kByte: has_bytes_ = true; break;
      case PieceKind::kUnknown: unk_id_ = static_cast<int>(id); break;
      case PieceKind::kControl: break;
      case PieceKind::kUserDefined:
        max_chars_ = std::max(max_chars_, utf8::count_chars(p.text));
        break;
      case PieceKind::kNormal: {
        if (!std::isfinite(p.logp)) throw FormatError(fmt::format("vocab: piece '{}' has non-finite logp", p.text));
        utf8::require_valid(p.text);
        max_chars_ = std::max(max_chars_, utf8::count_chars(p.text));
        min_logp = std::min(min_logp, p.logp);
        int node = 0;
        for (unsigned char c : p.text) {
          const std::uint64_t key = (static_cast<std::uint64_t>(node) << 8) | c;
          auto it = edges_.find(key);
          if (it == edges_.end()) {
            const int fresh = static_cast<int>(terminal_.size());
            terminal_.push_back(-1);
            it = edges_.emplace(key, fresh).first;
          }
          node = it->second;
        }
        terminal_[static_cast<std::size_t>(node)] = static_cast<int>(id);
        break;
      }
    }
  }
  unk_score_ = (std::isfinite(min_logp) ? min_logp : 0.0) - kUnknownPenalty;
  if (has_bytes_) {
    for (int b = 0; b < 256; ++b) {
      const auto id = static_cast<std::size_t>(kFirstByteId + b);
      if (id >= pieces_.size() || pieces_[id].kind != PieceKind::kByte ||
          pieces_[id].text != byte_piece_text(static_cast<std::uint8_t>(b))) {
        throw FormatError(fmt::format("vocab: byte token <0x{:02X}> must sit at id {}", b, id));
      }
    }
  }
}

std::optional<int> UnigramVocab::find(std::string_view text) const {
  auto it = index_.find(std::string(text));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<int> UnigramVocab::user_defined_ids() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    if (pieces_[i].kind == PieceKind::kUserDefined) out.push_back(static_cast<int>(i));
  }
  return out;
}

double UnigramVocab::normal_mass() const {
  double total = 0.0;
  for (const auto& p : pieces_) {
    if (p.kind == PieceKind::kNormal) total += std::exp(p.logp);
  }
  return total;
}

}  // namespace xmodel::tokenizer
