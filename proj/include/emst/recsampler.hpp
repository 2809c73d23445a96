#pragma once

// Three-level recursive l_p precision-sampling linear sketch. Hierarchical
// indices (i1, i2, i3) are sampled proportionally to l_p^p masses by
// scaling every entry with inverse exponentials and recovering argmaxes
// out of p-stable count-sketch towers; a batch carries 1 + S + S*S
// samples (one i1, S choices of i2, and S i3's per i2).
//
// Accumulators hold long doubles: with p near zero the scaled masses span
// an enormous dynamic range, and recovery only ever compares logarithms.

#include <cstdint>
#include <optional>
#include <vector>

#include "emst/sketch/pstable.hpp"

namespace emst {

struct RecSamplerShape {
  int64_t n1 = 1, n2 = 1, n3 = 1;
  double p = 0.01;  // l0 regime by default: |x|^p ~ 1 on integer data
  int samples = 2;  // S
  double gamma = 0;  // conditioning parameter; 0 -> min(0.02, 1/(48 S^2))
  int rows = 5;      // count-sketch repetitions (l)
  int buckets = 256; // B
  int reps = 65;     // p-stable repetitions per bucket (lambda)

  double resolved_gamma() const;
  void validate() const;
};

struct SampleBatch {
  int64_t i1 = 0;
  std::vector<int64_t> i2;               // S entries
  std::vector<std::vector<int64_t>> i3;  // S x S
};

class RecSamplerSketch {
 public:
  RecSamplerSketch(const RecSamplerShape& shape, uint64_t seed);

  void update(int64_t i1, int64_t i2, int64_t i3, int64_t delta);
  void merge(const RecSamplerSketch& other);

  // Tower recoveries (argmax of per-row bucket medians, log domain).
  int64_t recover_i1() const;
  int64_t recover_i2(int l1, int64_t i1) const;
  int64_t recover_i3(int l1, int l2, int64_t i1, int64_t i2) const;

  // Full batch with the bucket-consistency self-check; nullopt when the
  // check rejects or the sketch looks empty.
  std::optional<SampleBatch> sample_batch() const;

  // Exponentials are pure functions of the seed; tests regenerate them to
  // verify the conditioning events directly.
  double exp1(int64_t i1) const;
  double exp2(int l1, int64_t i1, int64_t i2) const;
  double exp3(int l1, int l2, int64_t i1, int64_t i2, int64_t i3) const;

  // log of the tower estimate behind a candidate (for diagnostics/tests).
  long double level1_log_value(int64_t i1) const;
  long double level2_log_value(int l1, int64_t i1, int64_t i2) const;
  long double level3_log_value(int l1, int l2, int64_t i1, int64_t i2, int64_t i3) const;

  double total_norm_estimate() const;  // ~ ||x||_p from the side sketch

  const RecSamplerShape& shape() const { return shape_; }
  uint64_t seed() const { return seed_; }
  size_t cell_count() const;

 private:
  struct Tower {
    std::vector<PolyHash4> row_hash;
    std::vector<long double> cells;  // rows x buckets x reps
    mutable std::vector<long double> log_med;  // rows x buckets, lazily filled
    mutable bool med_valid = false;
  };

  long double& cell(Tower& t, int row, uint64_t bucket, int rep);
  void refresh_medians(const Tower& t) const;
  long double tower_log_median(const Tower& t, SketchIndex key) const;
  void tower_update(Tower& t, SketchIndex key, long double scaled, const double* alphas);

  RecSamplerShape shape_;
  uint64_t seed_;
  double log_median_dp_;
  Tower tower1_;
  std::vector<Tower> tower2_;               // per l1
  std::vector<std::vector<Tower>> tower3_;  // per (l1, l2)
  PStableSketch total_;                     // plain p-stable side sketch
};

// l0-flavoured shape: p small enough that l_p^p masses track support sizes
// for integer vectors with the given magnitude bound.
RecSamplerShape l0_mode_shape(int64_t n1, int64_t n2, int64_t n3, int samples,
                              int64_t max_magnitude);

}  // namespace emst
