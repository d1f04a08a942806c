#include "xmodel/tokenizer/pretokenize.hpp"

#include <algorithm>

#include "xmodel/util/utf8.hpp"

namespace xmodel::tokenizer {
namespace {

enum class CharClass { kSpace, kDigit, kControlSpace, kWord };

CharClass classify(std::string_view ch, bool split_digits) {
  if (ch.size() != 1) return CharClass::kWord;
  const char c = ch[0];
  if (c == ' ') return CharClass::kSpace;
  if (split_digits && c >= '0' && c <= '9') return CharClass::kDigit;
  if (c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f') return CharClass::kControlSpace;
  return CharClass::kWord;
}

}  // namespace

bool is_space_run(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c == ' '; });
}

std::string normalize(std::string_view text, const TokenizerConfig& config) {
  if (!config.remove_extra_whitespace) return std::string(text);
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (c == ' ') {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::vector<std::string> normalize_and_pretokenize(std::string_view text, const TokenizerConfig& config) {
  utf8::require_valid(text);
  const std::string normalized = normalize(text, config);
  const auto chars = utf8::split_chars(normalized);

  std::vector<std::string> out;
  std::size_t i = 0;
  const std::size_t n = chars.size();
  while (i < n) {
    const CharClass cls = classify(chars[i], config.split_digits);
    if (cls == CharClass::kDigit || cls == CharClass::kControlSpace) {
      out.emplace_back(chars[i]);
      ++i;
      continue;
    }
    std::string token;
    if (cls == CharClass::kSpace) {
      std::size_t j = i;
      while (j < n && classify(chars[j], config.split_digits) == CharClass::kSpace) ++j;
      const std::size_t run = j - i;
      const bool word_follows = j < n && classify(chars[j], config.split_digits) == CharClass::kWord;
      if (!word_follows) {
        out.emplace_back(run, ' ');
        i = j;
        continue;
      }
      if (run > 1) out.emplace_back(run - 1, ' ');
      token.push_back(' ');
      i = j;
    }
    while (i < n && classify(chars[i], config.split_digits) == CharClass::kWord) {
      token.append(chars[i]);
      ++i;
    }
    out.push_back(std::move(token));
  }
  return out;
}

}  // namespace xmodel::tokenizer
