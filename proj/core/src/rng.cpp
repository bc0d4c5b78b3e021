#include "afrg/rng.hpp"

#include <cmath>
#include <numbers>

namespace afrg {

double SplitMix64::next_gaussian() {
  const double u1 = next_open_unit();
  const double u2 = next_unit();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t SplitMix64::next_below(std::uint64_t n) {
  // Rejection sampling; unbiased for any n >= 1.
  const std::uint64_t threshold = (0ull - n) % n;
  for (;;) {
    const std::uint64_t r = next_u64();
    if (r >= threshold) return r % n;
  }
}

SplitMix64 substream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t state = seed;
  for (std::uint64_t k : keys) {
    state = mix64(state ^ (mix64(k) + 0x9E3779B97F4A7C15ull));
  }
  return SplitMix64(state);
}

std::uint64_t derive_nonzero(std::uint64_t seed, std::uint64_t key) {
  const std::uint64_t s = mix64(seed ^ (mix64(key) + 0x9E3779B97F4A7C15ull));
  return s == 0 ? 0x9E3779B97F4A7C15ull : s;
}

}  // namespace afrg
