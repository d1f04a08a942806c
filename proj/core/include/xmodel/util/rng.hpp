#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace xmodel {

// splitmix64 step; used to expand a single seed into generator state and to
// derive independent streams.
std::uint64_t splitmix64(std::uint64_t& state);

// xoshiro256** seeded through splitmix64. Every random draw in the project
// goes through this generator so runs are reproducible across platforms;
// nothing here depends on std:: distributions.
class Rng {
 public:
  using State = std::array<std::uint64_t, 4>;

  explicit Rng(std::uint64_t seed = 0);

  // Independent stream for (seed, key). Used for per-item PRNGs whose result
  // must not depend on evaluation order.
  static Rng derive(std::uint64_t seed, std::string_view key);
  static Rng derive(std::uint64_t seed, std::uint64_t key);

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 random bits.
  double next_double();
  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t uniform(std::uint64_t n);
  // Standard normal via Box-Muller (no cached spare, so state stays a pure
  // function of the draw count).
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  const State& state() const { return s_; }
  void set_state(const State& s) { s_ = s; }

  // UniformRandomBitGenerator interface, for std::shuffle-style call sites.
  using result_type = std::uint64_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() { return next_u64(); }

 private:
  State s_{};
};

// Fisher-Yates driven by Rng::uniform; identical output on every platform.
template <typename It>
void shuffle(It first, It last, Rng& rng) {
  const auto n = last - first;
  for (auto i = n - 1; i > 0; --i) {
    const auto j = static_cast<decltype(i)>(rng.uniform(static_cast<std::uint64_t>(i) + 1));
    using std::swap;
    swap(first[i], first[j]);
  }
}

}  // namespace xmodel
