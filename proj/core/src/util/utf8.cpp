#include "xmodel/util/utf8.hpp"

#include <fmt/format.h>

#include "xmodel/error.hpp"

namespace xmodel::utf8 {
namespace {

// Decodes one scalar at s[i]. Returns the byte length or 0 if invalid.
std::size_t decode_one(std::string_view s, std::size_t i, char32_t& cp) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  const std::size_t len = sequence_length(b0);
  if (len == 0 || i + len > s.size()) return 0;
  if (len == 1) {
    cp = b0;
    return 1;
  }
  char32_t v = b0 & (0x7F >> len);
  for (std::size_t k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0) != 0x80) return 0;
    v = (v << 6) | (b & 0x3F);
  }
  static constexpr char32_t kMin[5] = {0, 0, 0x80, 0x800, 0x10000};
  if (v < kMin[len] || v > 0x10FFFF || (v >= 0xD800 && v <= 0xDFFF)) return 0;
  cp = v;
  return len;
}

}  // namespace

std::size_t sequence_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead & 0xE0) == 0xC0) return 2;
  if ((lead & 0xF0) == 0xE0) return 3;
  if ((lead & 0xF8) == 0xF0) return 4;
  return 0;
}

bool is_valid(std::string_view s, std::size_t* error_offset) {
  std::size_t i = 0;
  char32_t cp;
  while (i < s.size()) {
    const std::size_t n = decode_one(s, i, cp);
    if (n == 0) {
      if (error_offset) *error_offset = i;
      return false;
    }
    i += n;
  }
  return true;
}

void require_valid(std::string_view s) {
  std::size_t at = 0;
  if (!is_valid(s, &at)) {
    throw Error(fmt::format("invalid UTF-8 at byte offset {}", at));
  }
}

std::vector<char32_t> decode(std::string_view s) {
  std::vector<char32_t> out;
  out.reserve(s.size());
  std::size_t i = 0;
  char32_t cp;
  while (i < s.size()) {
    const std::size_t n = decode_one(s, i, cp);
    if (n == 0) throw Error(fmt::format("invalid UTF-8 at byte offset {}", i));
    out.push_back(cp);
    i += n;
  }
  return out;
}

void append(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::string encode(char32_t cp) {
  std::string s;
  append(s, cp);
  return s;
}

std::vector<std::string_view> split_chars(std::string_view s) {
  std::vector<std::string_view> out;
  out.reserve(s.size());
  std::size_t i = 0;
  char32_t cp;
  while (i < s.size()) {
    const std::size_t n = decode_one(s, i, cp);
    if (n == 0) throw Error(fmt::format("invalid UTF-8 at byte offset {}", i));
    out.push_back(s.substr(i, n));
    i += n;
  }
  return out;
}

std::size_t count_chars(std::string_view s) {
  std::size_t count = 0;
  for (unsigned char c : s) {
    if ((c & 0xC0) != 0x80) ++count;
  }
  return count;
}

bool decode_lossy(std::string_view bytes, std::string& out) {
  bool replaced = false;
  std::size_t i = 0;
  char32_t cp;
  while (i < bytes.size()) {
    const std::size_t n = decode_one(bytes, i, cp);
    if (n > 0) {
      out.append(bytes.substr(i, n));
      i += n;
      continue;
    }
    // Skip the maximal prefix of a plausible sequence, then emit one U+FFFD.
    replaced = true;
    const std::size_t want = sequence_length(static_cast<unsigned char>(bytes[i]));
    std::size_t skip = 1;
    while (want > 1 && skip < want && i + skip < bytes.size() &&
           (static_cast<unsigned char>(bytes[i + skip]) & 0xC0) == 0x80) {
      ++skip;
    }
    out.append("\xEF\xBF\xBD");
    i += skip;
  }
  return replaced;
}

}  // namespace xmodel::utf8
