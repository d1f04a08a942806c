#pragma once

#include <cstdint>
#include <span>
#include <string_view>

namespace xmodel {

inline constexpr std::uint64_t kFnvOffsetBasis = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

// 64-bit FNV-1a. `basis` allows incremental hashing over several buffers.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = kFnvOffsetBasis);
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t basis = kFnvOffsetBasis);

// MurmurHash3 fmix64 finalizer. Spreads FNV output across all 64 bits.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 33;
  x *= 0xff51afd7ed558ccdULL;
  x ^= x >> 33;
  x *= 0xc4ceb9fe1a85ec53ULL;
  x ^= x >> 33;
  return x;
}

}  // namespace xmodel
