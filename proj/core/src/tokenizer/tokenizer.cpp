#include "xmodel/tokenizer/tokenizer.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "xmodel/error.hpp"
#include "xmodel/tokenizer/lattice.hpp"
#include "xmodel/tokenizer/pretokenize.hpp"
#include "xmodel/util/utf8.hpp"

namespace xmodel::tokenizer {
namespace {

constexpr std::string_view kFormat = "xmodel-unigram-v1";

std::string escape_piece(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out;
}

std::string unescape_piece(std::string_view s, std::size_t line) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\') {
      out += s[i];
      continue;
    }
    if (i + 1 == s.size()) throw FormatError(fmt::format("vocab line {}: dangling escape", line));
    switch (s[++i]) {
      case '\\': out += '\\'; break;
      case 't': out += '\t'; break;
      case 'n': out += '\n'; break;
      case 'r': out += '\r'; break;
      default: throw FormatError(fmt::format("vocab line {}: unknown escape \\{}", line, s[i]));
    }
  }
  return out;
}

}  // namespace

TokenizerModel::TokenizerModel(TokenizerConfig config, UnigramVocab vocab)
    : config_(std::move(config)), vocab_(std::move(vocab)) {
  for (int id : vocab_.user_defined_ids()) {
    const auto& text = vocab_.piece(id).text;
    if (!is_space_run(text)) continue;
    if (space_run_ids_.size() <= text.size()) space_run_ids_.resize(text.size() + 1, -1);
    space_run_ids_[text.size()] = id;
  }
}

TokenizerModel TokenizerModel::train(const std::vector<std::string>& documents, const TokenizerConfig& config,
                                     TrainingTrace* trace) {
  const TrainingCorpus corpus = build_training_corpus(documents, config);
  return TokenizerModel(config, train_unigram(corpus, config, trace));
}

void TokenizerModel::encode_pretoken(std::string_view pretoken, std::vector<int>& out) const {
  const Segmentation seg = viterbi(vocab_, pretoken);
  for (const auto& s : seg.segments) {
    if (!s.unknown) {
      out.push_back(s.id);
    } else if (vocab_.has_byte_fallback()) {
      for (std::size_t i = s.begin; i < s.end; ++i) out.push_back(vocab_.byte_id(static_cast<std::uint8_t>(pretoken[i])));
    } else if (vocab_.unk_id()) {
      out.push_back(*vocab_.unk_id());
    } else {
      throw Error(fmt::format("encode: character \"{}\" is not in the vocab and there is no fallback",
                              pretoken.substr(s.begin, s.end - s.begin)));
    }
  }
}

std::vector<int> TokenizerModel::encode(std::string_view text) const {
  std::vector<int> out;
  for (const auto& pre : normalize_and_pretokenize(text, config_)) {
    if (pre.size() >= 2 && space_run_ids_.size() > 2 && is_space_run(pre)) {
      std::size_t rem = pre.size();
      while (rem >= 2) {
        std::size_t k = std::min(rem, space_run_ids_.size() - 1);
        while (k >= 2 && space_run_ids_[k] < 0) --k;
        if (k < 2) break;
        out.push_back(space_run_ids_[k]);
        rem -= k;
      }
      if (rem > 0) encode_pretoken(std::string(rem, ' '), out);
      continue;
    }
    encode_pretoken(pre, out);
  }
  return out;
}

DecodeResult TokenizerModel::decode(std::span<const int> ids) const {
  DecodeResult r;
  std::string bytes;
  const auto flush = [&] {
    if (bytes.empty()) return;
    if (utf8::decode_lossy(bytes, r.text)) r.invalid_bytes = true;
    bytes.clear();
  };
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab_.size()) {
      throw Error(fmt::format("decode: id {} out of range [0, {})", id, vocab_.size()));
    }
    const Piece& p = vocab_.piece(id);
    if (p.kind == PieceKind::kByte) {
      bytes.push_back(static_cast<char>(id - UnigramVocab::kFirstByteId));
      continue;
    }
    flush();
    switch (p.kind) {
      case PieceKind::kControl: break;
      case PieceKind::kUnknown: r.text += "⁇"; break;
      default: r.text += p.text;
    }
  }
  flush();
  return r;
}

std::string TokenizerModel::serialize() const {
  nlohmann::json header;
  header["format"] = kFormat;
  header["config"] = config_;
  header["special_tokens"] = {{"unk", UnigramVocab::kUnkId},
                              {"bos", UnigramVocab::kBosId},
                              {"eos", UnigramVocab::kEosId},
                              {"pad", UnigramVocab::kPadId}};
  header["byte_fallback"] = vocab_.has_byte_fallback();
  header["num_pieces"] = vocab_.size();
  header["user_defined"] = vocab_.user_defined_ids();
  std::string out = header.dump();
  out += '\n';
  for (const auto& p : vocab_.pieces()) {
    out += escape_piece(p.text);
    out += '\t';
    out += fmt::format("{}", p.logp);
    out += '\n';
  }
  return out;
}

TokenizerModel TokenizerModel::deserialize(std::string_view contents) {
  std::istringstream in{std::string(contents)};
  std::string line;
  if (!std::getline(in, line)) throw FormatError("vocab file is empty");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(fmt::format("vocab header is not JSON: {}", e.what()));
  }
  if (!header.is_object() || header.value("format", "") != kFormat) {
    throw FormatError(fmt::format("vocab header: expected format \"{}\"", kFormat));
  }
  TokenizerConfig config;
  std::size_t num_pieces = 0;
  bool byte_fallback = false;
  std::vector<int> user_ids;
  try {
    config = tokenizer_config_from_json(header.at("config"));
    num_pieces = header.at("num_pieces").get<std::size_t>();
    byte_fallback = header.at("byte_fallback").get<bool>();
    user_ids = header.at("user_defined").get<std::vector<int>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(fmt::format("vocab header: {}", e.what()));
  }

  const auto reserved = UnigramVocab::reserved_pieces(byte_fallback);
  std::vector<Piece> pieces;
  pieces.reserve(num_pieces);
  std::size_t lineno = 1;
  while (pieces.size() < num_pieces && std::getline(in, line)) {
    ++lineno;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos) throw FormatError(fmt::format("vocab line {}: missing tab", lineno));
    Piece p;
    p.text = unescape_piece(std::string_view(line).substr(0, tab), lineno);
    try {
      std::size_t used = 0;
      const std::string num = line.substr(tab + 1);
      p.logp = std::stod(num, &used);
      if (used != num.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw FormatError(fmt::format("vocab line {}: bad log-probability", lineno));
    }
    const std::size_t id = pieces.size();
    if (id < reserved.size()) {
      if (p.text != reserved[id].text) {
        throw FormatError(fmt::format("vocab line {}: expected reserved piece \"{}\"", lineno, reserved[id].text));
      }
      p.kind = reserved[id].kind;
    }
    pieces.push_back(std::move(p));
  }
  if (pieces.size() != num_pieces) {
    throw FormatError(fmt::format("vocab file has {} pieces, header says {}", pieces.size(), num_pieces));
  }
  for (int id : user_ids) {
    if (id < static_cast<int>(reserved.size()) || static_cast<std::size_t>(id) >= pieces.size()) {
      throw FormatError(fmt::format("vocab header: user-defined id {} out of range", id));
    }
    pieces[static_cast<std::size_t>(id)].kind = PieceKind::kUserDefined;
  }
  return TokenizerModel(config, UnigramVocab(std::move(pieces)));
}

void TokenizerModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  out << serialize();
  if (!out) throw Error(fmt::format("write failed: {}", path.string()));
}

TokenizerModel TokenizerModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot read {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize(ss.str());
}

double compression_rate(const TokenizerModel& model, const std::vector<std::string>& corpus, CompressionUnit unit) {
  std::size_t tokens = 0;
  std::size_t units = 0;
  for (const auto& doc : corpus) {
    tokens += model.encode(doc).size();
    units += unit == CompressionUnit::kBytes ? doc.size() : utf8::count_chars(doc);
  }
  if (units == 0) throw Error("compression_rate: corpus has no characters");
  return static_cast<double>(tokens) / static_cast<double>(units);
}

}  // namespace xmodel::tokenizer
