#pragma once

// p-stable norm sketch (Indyk): accumulators A_r = sum_i coef(r, i) * x_i
// with coef drawn p-stable from counter-mode randomness, estimate
// median_r |A_r| / median(|D_p|). The distribution median is calibrated
// once per p by Monte Carlo and cached.

#include <cstdint>
#include <vector>

#include "emst/sketch/ksparse.hpp"  // SketchIndex

namespace emst {

// Chambers-Mallows-Stuck draw: theta uniform on [-pi/2, pi/2], r uniform on
// (0,1). Works for all p in (0,2]; p = 1 is the Cauchy special case.
double gen_p_stable(double p, double theta, double r);

// Deterministic draw from (seed, role, counter).
double p_stable_from_seed(double p, uint64_t seed, uint64_t role, uint64_t counter);

// Median of |D_p|, Monte Carlo calibrated (1e6 draws, fixed internal seed)
// and cached per p for the process lifetime.
double p_stable_abs_median(double p);

// Exponential draw via inverse CDF, deterministic from (seed, role, counter).
double exp_from_seed(double rate, uint64_t seed, uint64_t role, uint64_t counter);

class PStableSketch {
 public:
  // reps = 0 picks a default based on p and eps0 (heavier for small p).
  PStableSketch(double p, uint64_t seed, int reps = 0, double eps0 = 0.1);

  void update(SketchIndex index, int64_t delta);
  void update_scaled(SketchIndex index, double delta);
  void merge(const PStableSketch& other);

  double estimate() const;  // ~ ||x||_p

  double p() const { return p_; }
  int reps() const { return static_cast<int>(acc_.size()); }
  uint64_t seed() const { return seed_; }

  std::vector<uint8_t> serialize() const;
  static PStableSketch deserialize(const std::vector<uint8_t>& blob, size_t* offset = nullptr);

  static int default_reps(double p, double eps0);

 private:
  double p_;
  uint64_t seed_;
  std::vector<double> acc_;
};

}  // namespace emst
