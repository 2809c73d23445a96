#include "emst/lsh.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "emst/prng.hpp"
#include "emst/sketch/l0_sampler.hpp"

namespace emst {

namespace {

constexpr uint64_t kRoleAnchor = role_tag("lsh-anchor");

}  // namespace

LshFunction::LshFunction(const LshConfig& cfg) : cfg_(cfg) {
  if (cfg.precision <= 0 || cfg.precision >= 1)
    throw std::invalid_argument("lsh: precision must lie in (0,1)");
  if (cfg.scale <= 0) throw std::invalid_argument("lsh: scale > 0");
  if (cfg.gamma_radius <= 0) throw std::invalid_argument("lsh: gamma > 0");
}

std::vector<double> LshFunction::anchor(int64_t i) const {
  const int d = dim_seen_ ? dim_seen_ : 1;
  dim_seen_ = d;
  std::vector<double> a(d);
  anchor_fill(i, a.data(), d);
  return a;
}

double LshFunction::anchor_domain_radius() const {
  // The qualifying ball of any query point inside B(0, Gamma) must sit
  // fully inside the anchor domain, otherwise clipping would inflate the
  // survival probability at scales comparable to Gamma. Extending the
  // domain with the scale keeps survival at exactly (1-eps)^d everywhere.
  return cfg_.gamma_radius + qualifying_radius();
}

void LshFunction::anchor_fill(int64_t i, double* a, int d) const {
  // Uniform draw from the l1 ball of the anchor domain: exponential
  // magnitudes normalized onto the simplex, a radius factor u^(1/d),
  // random signs. Coordinates are pure functions of (seed, i) and
  // discretized to the 2^-fractional_bits grid.
  double es[8];
  double e_sum = 0;
  for (int k = 0; k < d; ++k) {
    es[k] = -std::log(to_unit_pos(prf64(cfg_.seed, kRoleAnchor, i, 16 + k)));
    e_sum += es[k];
  }
  double u = to_unit_pos(prf64(cfg_.seed, kRoleAnchor, i, 8));
  double radius = anchor_domain_radius() * std::pow(u, 1.0 / d);
  uint64_t signs = prf64(cfg_.seed, kRoleAnchor, i, 9);
  double grid = std::ldexp(1.0, -cfg_.fractional_bits);
  for (int j = 0; j < d; ++j) {
    double mag = radius * es[j] / e_sum;
    double v = (signs >> j) & 1 ? -mag : mag;
    a[j] = std::round(v / grid) * grid;
  }
}

double LshFunction::anchor_distance(int64_t i, const Point& x) const {
  double a[8];
  anchor_fill(i, a, dim_seen_);
  double dist = 0;
  for (int j = 0; j < dim_seen_; ++j)
    dist += std::fabs(a[j] - static_cast<double>(x.coords[j]));
  return dist;
}

int64_t LshFunction::hash(const Point& x) const {
  dim_seen_ = static_cast<int>(x.dim());
  const double r = qualifying_radius();
  for (int64_t i = 1; i <= cfg_.anchor_cap; ++i) {
    if (anchor_distance(i, x) <= r) {
      scanned_high_water_ = std::max(scanned_high_water_, i);
      return i;
    }
  }
  throw std::runtime_error(
      "lsh: anchor cap exhausted before a qualifying anchor; raise anchor_cap "
      "or use a larger scale");
}

std::vector<int64_t> LshFunction::hash_all(const std::vector<Point>& xs) const {
  if (xs.empty()) return {};
  dim_seen_ = static_cast<int>(xs[0].dim());
  if (dim_seen_ > 8) throw std::invalid_argument("lsh: dimension in [1,8]");
  if (dim_seen_ == 1) return hash_all_line(xs);
  const int d = dim_seen_;
  const double r = qualifying_radius();
  std::vector<int64_t> out(xs.size(), 0);
  size_t unassigned = xs.size();
  std::vector<double> a(d);
  for (int64_t i = 1; i <= cfg_.anchor_cap && unassigned > 0; ++i) {
    anchor_fill(i, a.data(), d);
    for (size_t k = 0; k < xs.size(); ++k) {
      if (out[k]) continue;
      double dist = 0;
      for (int j = 0; j < d; ++j) dist += std::fabs(a[j] - static_cast<double>(xs[k].coords[j]));
      if (dist <= r) {
        out[k] = i;
        --unassigned;
        scanned_high_water_ = std::max(scanned_high_water_, i);
      }
    }
  }
  if (unassigned > 0)
    throw std::runtime_error(
        "lsh: anchor cap exhausted before a qualifying anchor; raise anchor_cap "
        "or use a larger scale");
  return out;
}

// One-dimensional batch assignment without materializing miss anchors.
// Anchors are i.i.d. uniform on the domain; only those landing inside the
// union of the query intervals [x_k - r, x_k + r] can assign anything, and
// conditioned on landing there the position is uniform over the union.
// Drawing (geometric index gap, uniform position in the union) reproduces
// the joint law of (assigned index, anchor position) for every query point
// exactly while skipping the misses. After this call the instance is
// batch-bound: anchor positions for tester() come from the simulated hits.
std::vector<int64_t> LshFunction::hash_all_line(const std::vector<Point>& xs) const {
  const double r = qualifying_radius();
  const double dom = anchor_domain_radius();
  const double lo_dom = -dom, hi_dom = dom;

  struct Seg {
    double lo, hi;
  };
  std::vector<std::pair<double, size_t>> order(xs.size());
  for (size_t k = 0; k < xs.size(); ++k) order[k] = {static_cast<double>(xs[k].coords[0]), k};
  std::sort(order.begin(), order.end());
  std::vector<Seg> segs;
  for (auto& [x, k] : order) {
    double lo = std::max(lo_dom, x - r), hi = std::min(hi_dom, x + r);
    if (lo > hi) throw std::runtime_error("lsh: query point outside the anchor domain");
    if (!segs.empty() && lo <= segs.back().hi)
      segs.back().hi = std::max(segs.back().hi, hi);
    else
      segs.push_back({lo, hi});
  }
  std::vector<double> cum(segs.size() + 1, 0.0);
  for (size_t s = 0; s < segs.size(); ++s) cum[s + 1] = cum[s] + (segs[s].hi - segs[s].lo);
  const double union_len = cum.back();
  const double domain_len = hi_dom - lo_dom;
  const double q = union_len / domain_len;

  std::vector<int64_t> out(xs.size(), 0);
  size_t unassigned = xs.size();
  Rng rng(cfg_.seed, role_tag("lsh-line-skip"));
  double grid = std::ldexp(1.0, -cfg_.fractional_bits);
  int64_t index = 0;
  line_anchor_.clear();
  while (unassigned > 0) {
    // geometric gap to the next anchor that lands inside the union
    double u = rng.next_unit_pos();
    double gap = (q >= 1.0) ? 1.0 : std::ceil(std::log(u) / std::log1p(-q));
    index += static_cast<int64_t>(std::max(1.0, gap));
    if (index > cfg_.anchor_cap)
      throw std::runtime_error(
          "lsh: anchor cap exhausted before a qualifying anchor; raise anchor_cap "
          "or use a larger scale");
    double pos = rng.next_unit() * union_len;
    size_t s = std::upper_bound(cum.begin(), cum.end(), pos) - cum.begin() - 1;
    s = std::min(s, segs.size() - 1);
    double y = segs[s].lo + (pos - cum[s]);
    y = std::round(y / grid) * grid;
    bool used = false;
    for (size_t k = 0; k < xs.size(); ++k) {
      if (out[k]) continue;
      if (std::fabs(y - static_cast<double>(xs[k].coords[0])) <= r) {
        out[k] = index;
        --unassigned;
        used = true;
      }
    }
    if (used) line_anchor_[index] = y;
    scanned_high_water_ = std::max(scanned_high_water_, index);
  }
  return out;
}

bool LshFunction::tester(const Point& x) const { return tester(x, hash(x)); }

bool LshFunction::tester(const Point& x, int64_t bucket) const {
  dim_seen_ = static_cast<int>(x.dim());
  if (!line_anchor_.empty()) {
    auto it = line_anchor_.find(bucket);
    if (it != line_anchor_.end())
      return std::fabs(it->second - static_cast<double>(x.coords[0])) <= survival_radius();
  }
  return anchor_distance(bucket, x) <= survival_radius();
}

Point Centering::apply(const Point& p) const {
  Point q;
  q.coords.resize(p.dim());
  for (size_t j = 0; j < p.dim(); ++j) q.coords[j] = p.coords[j] - offset[j];
  return q;
}

Centering center_for(const std::vector<Point>& pts) {
  Centering c;
  if (pts.empty()) throw std::invalid_argument("center_for: empty set");
  const int d = static_cast<int>(pts[0].dim());
  c.offset.resize(d);
  int64_t bound = 1;
  for (int j = 0; j < d; ++j) {
    int64_t lo = pts[0].coords[j], hi = pts[0].coords[j];
    for (const auto& p : pts) {
      lo = std::min(lo, p.coords[j]);
      hi = std::max(hi, p.coords[j]);
    }
    c.offset[j] = (lo + hi) / 2;
    bound = std::max(bound, std::max(hi - c.offset[j], c.offset[j] - lo) + 1);
  }
  c.gamma = static_cast<double>(d) * static_cast<double>(bound);
  return c;
}

Centering center_for(const PointMultiset& P) { return center_for(P.support()); }

DiameterResult diameter_sketch(const PointMultiset& P, double epsilon, uint64_t seed) {
  if (P.empty()) throw std::invalid_argument("diameter_sketch: empty set");
  DiameterResult res;
  auto pts = P.support();
  const int d = static_cast<int>(pts[0].dim());
  Centering c = center_for(pts);
  std::vector<Point> centered;
  centered.reserve(pts.size());
  for (const auto& p : pts) centered.push_back(c.apply(p));

  const double survive = std::pow(1.0 - epsilon, d);
  const int reps = std::max<int>(
      4, static_cast<int>(std::ceil(2.0 / survive *
                                    std::log(static_cast<double>(pts.size() + 4) * d * 16))));

  int top = 1;
  while (std::ldexp(1.0, top) < 2.0 * c.gamma) ++top;

  // Scan candidate scales downward. Levels far below the first all-fail
  // scale cannot be single-bucket (bucket diameter < true diameter), so the
  // scan stops a few levels past it.
  int64_t t0 = -1;
  int first_fail = -1;
  const int tail = static_cast<int>(std::ceil(std::log2(2.0 / epsilon))) + 1;
  for (int i = top; i >= 0; --i) {
    double t = std::ldexp(1.0, i);
    bool any_single = false;
    for (int rep = 0; rep < reps && !any_single; ++rep) {
      LshConfig cfg;
      cfg.scale = t;
      cfg.precision = epsilon;
      cfg.gamma_radius = c.gamma;
      cfg.seed = prf64(seed, role_tag("diam-rep"), i, rep);
      LshFunction h(cfg);
      auto ids = h.hash_all(centered);
      L0Estimator est(prf64(seed, role_tag("diam-l0"), i, rep), 0.15);
      for (int64_t id : ids) est.update(static_cast<SketchIndex>(id), 1);
      if (est.estimate() < 1.5) any_single = true;
    }
    if (any_single) {
      t0 = static_cast<int64_t>(t);
      res.smallest_single_bucket_scale = t;
    } else if (first_fail < 0) {
      first_fail = i;
    }
    if (first_fail >= 0 && i <= first_fail - tail) break;
  }
  if (t0 < 0) {
    // No scale ever collapsed to one bucket; fall back to the top scale.
    res.warnings.push_back("diameter sketch: no single-bucket scale found");
    t0 = int64_t{1} << top;
  }
  if (pts.size() == 1) res.warnings.push_back("diameter sketch: single distinct point");
  res.delta = static_cast<int64_t>(std::ceil(2.0 * static_cast<double>(t0) / epsilon));
  res.delta = std::max<int64_t>(1, res.delta);
  return res;
}

}  // namespace emst
