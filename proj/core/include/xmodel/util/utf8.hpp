#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace xmodel::utf8 {

// Length in bytes of the sequence introduced by `lead`, or 0 for an invalid
// lead byte.
std::size_t sequence_length(unsigned char lead);

// Strict validation: rejects overlong forms, surrogates and code points past
// U+10FFFF. On failure `error_offset` (if given) receives the byte offset.
bool is_valid(std::string_view s, std::size_t* error_offset = nullptr);

// Throws xmodel::Error naming the offending byte offset.
void require_valid(std::string_view s);

std::vector<char32_t> decode(std::string_view s);
std::string encode(char32_t cp);
void append(std::string& out, char32_t cp);

// One string_view per code point, pointing into `s`. `s` must be valid.
std::vector<std::string_view> split_chars(std::string_view s);

std::size_t count_chars(std::string_view s);

// Decode arbitrary bytes, substituting U+FFFD for every maximal invalid
// subsequence. Returns true if any substitution was made.
bool decode_lossy(std::string_view bytes, std::string& out);

}  // namespace xmodel::utf8
