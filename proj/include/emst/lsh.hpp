#pragma once

// Locality-sensitive hashing with verifiable recovery, and the diameter
// approximation built on it.
//
// A function at scale t with precision eps assigns x to the first anchor
// p_i (an i.i.d. uniform point of B(0, Gamma + t/eps) under l1) with
// ||p_i - x||_1 <= t/eps. Colliding points are within 2t/eps of each other
// deterministically. A point "survives" when its anchor is within
// t/eps - t, which captures its whole t-ball in one bucket and happens
// with probability (1-eps)^d. Anchors are lazily recomputed from the seed;
// nothing is materialized.

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "emst/geometry.hpp"

namespace emst {

struct LshConfig {
  double scale = 1;          // t
  double precision = 0.25;   // eps; qualifying radius t/eps, survival t/eps - t
  double gamma_radius = 1;   // Gamma: dataset lies in B(0, Gamma)
  uint64_t seed = 1;
  int64_t anchor_cap = 1'000'000;  // scan limit before reporting an error
  int fractional_bits = 20;        // anchors discretized to 2^-bits
};

class LshFunction {
 public:
  explicit LshFunction(const LshConfig& cfg);

  // Anchor i as a pure function of (seed, i); coordinates are multiples of
  // 2^-fractional_bits inside B(0, 2*Gamma).
  std::vector<double> anchor(int64_t i) const;

  // Smallest anchor index within t/eps of x. Throws if the cap exhausts.
  int64_t hash(const Point& x) const;

  // One shared scan over the anchor stream for a batch of points.
  std::vector<int64_t> hash_all(const std::vector<Point>& xs) const;

  // Survival: anchor at distance <= t/eps - t, so B(x, t) shares the bucket.
  bool tester(const Point& x) const;
  bool tester(const Point& x, int64_t bucket) const;  // bucket = hash(x), if known

  double qualifying_radius() const { return cfg_.scale / cfg_.precision; }
  double survival_radius() const { return cfg_.scale / cfg_.precision - cfg_.scale; }
  double collision_diameter_bound() const { return 2 * qualifying_radius(); }
  int64_t anchors_scanned() const { return scanned_high_water_; }
  const LshConfig& config() const { return cfg_; }

 private:
  double anchor_domain_radius() const;
  void anchor_fill(int64_t i, double* out, int d) const;
  double anchor_distance(int64_t i, const Point& x) const;
  std::vector<int64_t> hash_all_line(const std::vector<Point>& xs) const;

  LshConfig cfg_;
  mutable int dim_seen_ = 0;
  mutable int64_t scanned_high_water_ = 0;
  // 1-D batch mode: simulated hit positions keyed by anchor index. A batch
  // call binds the instance to those anchors; see hash_all_line.
  mutable std::map<int64_t, double> line_anchor_;
};

// Translation that centers a point set so it fits in B(0, Gamma); Gamma is
// d times the centered coordinate bound.
struct Centering {
  std::vector<int64_t> offset;  // subtracted from every coordinate
  double gamma = 1;

  Point apply(const Point& p) const;
};

Centering center_for(const PointMultiset& P);
Centering center_for(const std::vector<Point>& pts);

struct DiameterResult {
  int64_t delta = 1;  // reported integer Delta
  double smallest_single_bucket_scale = 0;
  std::vector<std::string> warnings;
};

// Streaming-style diameter approximation: for candidate scales t = 2^i,
// draw several hash functions and test (via an l0 estimate over bucket
// ids) whether some repetition maps everything into one bucket; report
// Delta = 2*t0/eps for the smallest such t0. Guarantees
// diam <= Delta <= (4/eps) * diam with high probability.
DiameterResult diameter_sketch(const PointMultiset& P, double epsilon, uint64_t seed);

}  // namespace emst
