#pragma once

// Exact k-sparse recovery sketch over a huge implicit vector.
//
// Layout: `rows` hash rows of 2k buckets. Each bucket is a one-sparse
// tester holding (count, index-weighted sum, fingerprint). Decoding peels
// verified one-sparse buckets until the sketch empties (success) or no
// bucket verifies (fail). Index universe is up to 96 bits so that
// count*index products stay inside 128-bit arithmetic.

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "emst/field_hash.hpp"
#include "emst/prng.hpp"

namespace emst {

using SketchIndex = unsigned __int128;

constexpr int kMaxIndexBits = 96;

struct KSparseCell {
  int64_t count = 0;
  SketchIndex ixsum = 0;  // sum of value * index, wrapping mod 2^128
  uint64_t fp = 0;        // sum of value * fingerprint(index) mod 2^61-1

  bool zero() const { return count == 0 && ixsum == 0 && fp == 0; }
};

class KSparseSketch {
 public:
  // delta_fail defaults to 2^-20; rows scale with log of (k/delta_fail).
  KSparseSketch(int k, uint64_t seed, double delta_fail = 9.5367431640625e-07);

  void update(SketchIndex index, int64_t delta);
  void merge(const KSparseSketch& other);  // throws on seed/shape mismatch

  // Exactly the nonzero (index, value) pairs when the vector is k-sparse,
  // std::nullopt (FAIL) otherwise. Sorted by index.
  std::optional<std::vector<std::pair<SketchIndex, int64_t>>> decode() const;

  bool definitely_zero() const;  // all cells zero

  int k() const { return k_; }
  int rows() const { return rows_; }
  int buckets_per_row() const { return buckets_; }
  uint64_t seed() const { return seed_; }
  size_t cell_count() const { return cells_.size(); }

  std::vector<uint8_t> serialize() const;
  static KSparseSketch deserialize(const std::vector<uint8_t>& blob, size_t* offset = nullptr);

 private:
  friend class L0Sampler;
  KSparseCell& cell(int row, uint64_t bucket) { return cells_[row * buckets_ + bucket]; }
  const KSparseCell& cell(int row, uint64_t bucket) const { return cells_[row * buckets_ + bucket]; }

  int k_;
  int rows_;
  int buckets_;
  uint64_t seed_;
  std::vector<PolyHash4> row_hash_;
  std::vector<KSparseCell> cells_;
};

}  // namespace emst
