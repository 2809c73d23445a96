#pragma once

// Counter-mode pseudorandomness used throughout the library.
//
// Every random quantity (hash coefficients, stable draws, exponentials,
// anchors) is a pure function of (seed, role, counter), so sketch state
// never stores coefficients and parallel evaluation is trivially safe.
// All derivations go through a splitmix64-style mixer; no std::random
// distributions are used so results are identical across platforms.

#include <cmath>
#include <cstdint>
#include <string_view>

namespace emst {

inline uint64_t mix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Stateless PRF over (seed, role, counter[, lane]).
inline uint64_t prf64(uint64_t seed, uint64_t role, uint64_t counter, uint64_t lane = 0) {
  uint64_t h = mix64(seed ^ 0x2545f4914f6cdd1dULL);
  h = mix64(h ^ role * 0x9e3779b97f4a7c15ULL);
  h = mix64(h ^ counter * 0xd1b54a32d192ed03ULL);
  if (lane) h = mix64(h ^ lane * 0x8cb92ba72f3d8dd7ULL);
  return h;
}

// Stable role tags derived from short names, so call sites stay readable.
constexpr uint64_t role_tag(std::string_view name) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Uniform double in [0,1) from 53 bits.
inline double to_unit(uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

// Uniform double in (0,1], safe as a log() argument.
inline double to_unit_pos(uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

// Small stateful generator over the stateless PRF. Cheap to copy; a fresh
// derived generator is a pure function of (seed, role).
class Rng {
 public:
  Rng(uint64_t seed, uint64_t role) : seed_(seed), role_(role) {}

  uint64_t next_u64() { return prf64(seed_, role_, counter_++); }
  double next_unit() { return to_unit(next_u64()); }
  double next_unit_pos() { return to_unit_pos(next_u64()); }

  // Unbiased-enough bounded draw via 128-bit fixed point multiplication
  // (bias below 2^-64, irrelevant at any tolerance we test).
  uint64_t next_below(uint64_t n) {
    return static_cast<uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  int64_t next_in(int64_t lo, int64_t hi) {  // inclusive range
    return lo + static_cast<int64_t>(next_below(static_cast<uint64_t>(hi - lo + 1)));
  }

  double next_exponential(double rate) { return -std::log(next_unit_pos()) / rate; }

  Rng derive(uint64_t sub_role) const { return Rng(prf64(seed_, role_, 0, sub_role), sub_role); }

  uint64_t seed() const { return seed_; }

 private:
  uint64_t seed_;
  uint64_t role_;
  uint64_t counter_ = 0;
};

}  // namespace emst
