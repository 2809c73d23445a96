#pragma once

// l0 sampling: a uniform index from the support of an implicit vector, or
// FAIL. Geometric subsampling levels (index kept at level l when the top l
// bits of a seeded 64-bit hash vanish), a small sparse-recovery sketch per
// level, and argmin-hash selection at the deepest decodable level.

#include <cstdint>
#include <optional>
#include <vector>

#include "emst/sketch/ksparse.hpp"

namespace emst {

class L0Sampler {
 public:
  // levels: subsampling depth (supports up to ~2^levels distinct indices);
  // per_level_k: sparsity budget of each level's recovery sketch.
  explicit L0Sampler(uint64_t seed, int levels = 44, int per_level_k = 8);

  void update(SketchIndex index, int64_t delta);
  void merge(const L0Sampler& other);

  // Uniform support index, or std::nullopt (FAIL). Deterministic given the
  // sketch state. Also FAIL on the zero vector.
  std::optional<SketchIndex> sample() const;

  uint64_t seed() const { return seed_; }
  int levels() const { return static_cast<int>(sketches_.size()); }

  std::vector<uint8_t> serialize() const;
  static L0Sampler deserialize(const std::vector<uint8_t>& blob, size_t* offset = nullptr);

 private:
  int level_of(SketchIndex index) const;
  uint64_t rank_hash(SketchIndex index) const;

  uint64_t seed_;
  std::vector<KSparseSketch> sketches_;
};

// l0 estimation: (1 +- eps0) * ||x||_0. Per level, K fingerprint buckets;
// occupancy inversion (linear counting) at the first level that is not
// saturated, medianed over independent repetitions.
class L0Estimator {
 public:
  explicit L0Estimator(uint64_t seed, double eps0 = 0.1, int levels = 44, int reps = 9);

  void update(SketchIndex index, int64_t delta);
  void merge(const L0Estimator& other);

  double estimate() const;  // 0 for the zero vector

  uint64_t seed() const { return seed_; }
  int buckets() const { return buckets_; }

  std::vector<uint8_t> serialize() const;
  static L0Estimator deserialize(const std::vector<uint8_t>& blob, size_t* offset = nullptr);

 private:
  uint64_t seed_;
  double eps0_;
  int levels_;
  int reps_;
  int buckets_;
  // fp[rep][level * buckets + bucket]: sum of value * fingerprint mod p
  std::vector<std::vector<uint64_t>> fp_;
};

}  // namespace emst
