#include "xmodel/eval/prompt.hpp"

#include <cctype>

#include <fmt/format.h>

#include "xmodel/error.hpp"
#include "xmodel/util/rng.hpp"

namespace xmodel::eval {

std::array<int, 4> option_permutation(const EvalItem& item, std::uint64_t seed) {
  std::array<int, 4> perm{0, 1, 2, 3};
  Rng rng = Rng::derive(seed, item.id);
  shuffle(perm.begin(), perm.end(), rng);
  return perm;
}

std::string render_block(const EvalItem& item, const std::array<int, 4>& permutation, bool with_answer) {
  std::string out = "Question: " + item.question + "\n";
  for (int p = 0; p < 4; ++p) {
    out += fmt::format("{}. {}\n", kLetters[p], item.options[static_cast<std::size_t>(permutation[p])]);
  }
  out += "Answer:";
  if (with_answer) {
    for (int p = 0; p < 4; ++p) {
      if (permutation[p] == item.correct_index) out += fmt::format(" {}\n\n", kLetters[p]);
    }
  }
  return out;
}

std::string apply_chat_template(std::string_view chat_template, std::string_view prompt) {
  const auto at = chat_template.find("{prompt}");
  if (at == std::string_view::npos) throw ConfigError("chat template has no {prompt} placeholder");
  std::string out(chat_template.substr(0, at));
  out += prompt;
  out += chat_template.substr(at + 8);
  return out;
}

PromptInstance build_prompt(const EvalItem& item, std::span<const EvalItem> fewshot, std::uint64_t seed,
                            std::string_view header, const std::optional<std::string>& chat_template) {
  validate_item(item);
  PromptInstance p;
  if (!header.empty()) {
    p.text += header;
    p.text += "\n\n";
  }
  for (const auto& shot : fewshot) {
    validate_item(shot);
    if (shot.id == item.id) throw Error(fmt::format("build_prompt: item {} used as its own exemplar", item.id));
    p.text += render_block(shot, option_permutation(shot, seed), true);
  }
  p.permutation = option_permutation(item, seed);
  p.text += render_block(item, p.permutation, false);
  for (int i = 0; i < 4; ++i) {
    if (p.permutation[i] == item.correct_index) p.gold = kLetters[i];
  }
  if (chat_template) p.text = apply_chat_template(*chat_template, p.text);
  return p;
}

std::optional<char> match_choice(std::string_view s) {
  const auto space = [](unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; };
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c < 'A' || c > 'D') continue;
    const bool before_ok = i == 0 || space(static_cast<unsigned char>(s[i - 1])) ||
                           (static_cast<unsigned char>(s[i - 1]) < 0x80 && std::ispunct(static_cast<unsigned char>(s[i - 1])));
    if (!before_ok) continue;
    const bool after_ok =
        i + 1 == s.size() || space(static_cast<unsigned char>(s[i + 1])) || s[i + 1] == '.' || s[i + 1] == ':' || s[i + 1] == ')';
    if (after_ok) return c;
  }
  return std::nullopt;
}

}  // namespace xmodel::eval
