#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "xmodel/eval/tasks.hpp"

namespace xmodel::eval {

inline constexpr std::string_view kDefaultHeader =
    "The following are multiple choice questions (with answers) about Thai language knowledge.";
inline constexpr std::string_view kDefaultChatTemplate = "<|user|>\n{prompt}\n<|assistant|>\n";
inline constexpr char kLetters[4] = {'A', 'B', 'C', 'D'};

struct PromptInstance {
  std::string text;
  // permutation[p] = original index of the option shown at letter p.
  std::array<int, 4> permutation{};
  char gold = 'A';
};

// Option order for an item: a Fisher-Yates shuffle driven by
// Rng::derive(seed, item.id), so it does not depend on evaluation order.
std::array<int, 4> option_permutation(const EvalItem& item, std::uint64_t seed);

// "Question: q\nA. ..\nB. ..\nC. ..\nD. ..\nAnswer:" plus " X\n\n" for a
// solved exemplar.
std::string render_block(const EvalItem& item, const std::array<int, 4>& permutation, bool with_answer);

// header "\n\n" exemplars target. With a chat template the whole prompt is
// substituted for its {prompt} placeholder.
PromptInstance build_prompt(const EvalItem& item, std::span<const EvalItem> fewshot, std::uint64_t seed,
                            std::string_view header = kDefaultHeader,
                            const std::optional<std::string>& chat_template = std::nullopt);

std::string apply_chat_template(std::string_view chat_template, std::string_view prompt);

// First A/B/C/D standing alone: preceded by start, whitespace or ASCII
// punctuation and followed by end, whitespace, '.', ':' or ')'. Returns
// nullopt (unparsed) otherwise.
std::optional<char> match_choice(std::string_view continuation);

}  // namespace xmodel::eval
