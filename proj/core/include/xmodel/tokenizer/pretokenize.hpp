#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "xmodel/tokenizer/config.hpp"

namespace xmodel::tokenizer {

// Splits text into the units the lattice runs over. Spaces are carried as a
// leading space on the following word (" word"); any extra spaces in a run
// form their own all-space pretoken, so "a   b" -> {"a", "  ", " b"}.
// Each ASCII digit is its own pretoken when split_digits is on, and tab / CR /
// LF / VT / FF are single-character pretokens.
//
// With remove_extra_whitespace off, concatenating the result reproduces the
// input byte for byte. Throws xmodel::Error on invalid UTF-8.
std::vector<std::string> normalize_and_pretokenize(std::string_view text, const TokenizerConfig& config);

// Applies only the normalization step (collapsing space runs and trimming
// when remove_extra_whitespace is on; identity otherwise).
std::string normalize(std::string_view text, const TokenizerConfig& config);

bool is_space_run(std::string_view s);

}  // namespace xmodel::tokenizer
