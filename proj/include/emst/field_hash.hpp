#pragma once

// 4-wise independent hashing over the Mersenne prime field 2^61-1,
// realized as seeded degree-3 polynomials. Count-sketch style structures
// need 4-wise independence; fingerprints reuse the same field.

#include <cstdint>

#include "emst/prng.hpp"

namespace emst {

using uint128 = unsigned __int128;

constexpr uint64_t kMersenne61 = (1ULL << 61) - 1;

inline uint64_t mod61(uint128 x) {
  uint64_t lo = static_cast<uint64_t>(x & kMersenne61);
  uint64_t hi = static_cast<uint64_t>(x >> 61);
  uint64_t r = lo + hi;
  if (r >= kMersenne61) r -= kMersenne61;
  return r;
}

inline uint64_t mulmod61(uint64_t a, uint64_t b) {
  return mod61(static_cast<uint128>(a) * b);
}

inline uint64_t addmod61(uint64_t a, uint64_t b) {
  uint64_t r = a + b;
  if (r >= kMersenne61) r -= kMersenne61;
  return r;
}

// Folds a 128-bit index into the field. Injective on indices below 2^61;
// wider indices are mixed through two field multiplications.
inline uint64_t fold61(uint128 x) {
  uint64_t lo = static_cast<uint64_t>(x) & kMersenne61;
  uint64_t mid = static_cast<uint64_t>(x >> 61) & kMersenne61;
  uint64_t hi = static_cast<uint64_t>(x >> 122);
  uint64_t r = addmod61(lo, mulmod61(mid, 0x5851f42d4c957f2dULL % kMersenne61));
  return addmod61(r, mulmod61(hi + 1, 0x14057b7ef767814fULL % kMersenne61));
}

// Degree-3 polynomial over F_{2^61-1}; evaluations are 4-wise independent.
class PolyHash4 {
 public:
  PolyHash4() = default;
  PolyHash4(uint64_t seed, uint64_t role) {
    for (int i = 0; i < 4; ++i) c_[i] = prf64(seed, role, i) % kMersenne61;
    if (c_[3] == 0) c_[3] = 1;
  }

  uint64_t eval(uint128 x) const {
    uint64_t v = fold61(x);
    uint64_t acc = c_[3];
    acc = addmod61(mulmod61(acc, v), c_[2]);
    acc = addmod61(mulmod61(acc, v), c_[1]);
    acc = addmod61(mulmod61(acc, v), c_[0]);
    return acc;
  }

  // Bucket in [0, buckets).
  uint64_t bucket(uint128 x, uint64_t buckets) const { return eval(x) % buckets; }

  // Sign in {-1, +1}.
  int sign(uint128 x) const { return (eval(x) & 1) ? 1 : -1; }

 private:
  uint64_t c_[4] = {0, 0, 0, 1};
};

// Keyed fingerprint of an index, used to verify sparse decodings.
inline uint64_t fingerprint61(uint64_t seed, uint64_t role, uint128 x) {
  uint64_t a = prf64(seed, role, 1) % kMersenne61;
  uint64_t b = prf64(seed, role, 2) % kMersenne61;
  if (a == 0) a = 1;
  uint64_t v = fold61(x);
  // a*v^2 + b*v + (v xor-mixed) keeps collisions at ~2^-61 per pair.
  uint64_t r = mulmod61(a, mulmod61(v, v));
  r = addmod61(r, mulmod61(b, v));
  return addmod61(r, fold61(static_cast<uint128>(mix64(static_cast<uint64_t>(x)))));
}

}  // namespace emst
