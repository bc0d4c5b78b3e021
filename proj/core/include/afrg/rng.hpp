#ifndef AFRG_RNG_HPP
#define AFRG_RNG_HPP

#include <cstdint>
#include <initializer_list>

namespace afrg {

//! SplitMix64 finalizer. Used both as the generator step and for key mixing.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

//! Deterministic 64-bit generator (SplitMix64).
//!
//! Every random quantity in the project flows through this class so that runs
//! are bit-reproducible from their seeds. Gaussian draws consume exactly two
//! raw outputs each (Box-Muller, cosine branch only); nothing is cached, so a
//! stream's content is a pure function of (seed, draw index).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    return mix64(state_);
  }

  //! Uniform double in [0, 1), 53 bits of mantissa.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  //! Uniform double in (0, 1]; safe as a log() argument.
  double next_open_unit() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  //! Uniform double in [lo, hi).
  double next_in(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  //! Standard normal via Box-Muller; consumes two raw outputs.
  double next_gaussian();

  //! Unbiased uniform integer in [0, n); n must be positive.
  std::uint64_t next_below(std::uint64_t n);

 private:
  std::uint64_t state_;
};

//! Derives an independent substream from a seed and a key tuple.
//!
//! state = seed, then for each key k: state = mix64(state ^ (mix64(k) + golden)).
//! The scheme is fixed; decoder files and experiment configs rely on it for
//! bit-identical regeneration.
SplitMix64 substream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys);

//! Substream seed for per-sample attack randomness; never returns 0 so the
//! "seed 0 disables random start" convention cannot trigger by accident.
std::uint64_t derive_nonzero(std::uint64_t seed, std::uint64_t key);

}  // namespace afrg

#endif  // AFRG_RNG_HPP
