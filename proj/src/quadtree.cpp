#include "emst/quadtree.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "emst/prng.hpp"

namespace emst {

namespace {

bool is_pow2(int64_t v) { return v > 0 && (v & (v - 1)) == 0; }

}  // namespace

QuadtreeConfig QuadtreeConfig::make(int dimension, int64_t lambda, int64_t delta_bound,
                                    double epsilon, int alpha, uint64_t seed) {
  QuadtreeConfig cfg;
  cfg.dimension = dimension;
  cfg.lambda = lambda;
  cfg.delta_bound = delta_bound;
  cfg.epsilon = epsilon;
  cfg.alpha = alpha;
  cfg.seed = seed;
  cfg.validate();
  return cfg;
}

double QuadtreeConfig::resolved_delta() const {
  if (delta > 0) return std::min(delta, 0.01);
  return std::min(0.01, 1.0 / (epsilon * std::max(alpha, 1)));
}

double QuadtreeConfig::resolved_beta() const {
  if (beta > 0) return beta;
  return std::max(10.0 * dimension, 10.0 / resolved_delta());
}

void QuadtreeConfig::validate() const {
  if (dimension < 1 || dimension > 8) throw std::invalid_argument("quadtree: dimension in [1,8]");
  if (lambda < 1) throw std::invalid_argument("quadtree: lambda >= 1");
  if (!is_pow2(delta_bound)) throw std::invalid_argument("quadtree: Delta must be a power of 2");
  if (epsilon <= 0 || epsilon >= 1) throw std::invalid_argument("quadtree: epsilon in (0,1)");
  if (alpha < 1) throw std::invalid_argument("quadtree: alpha >= 1");
  double d = resolved_delta();
  if (d > 0.01 + 1e-12) throw std::invalid_argument("quadtree: delta <= 1/100");
  if (resolved_beta() * d < 10.0 - 1e-9)
    throw std::invalid_argument("quadtree: beta*delta >= 10 required");
}

LevelStructure build_levels(const QuadtreeConfig& cfg) {
  cfg.validate();
  LevelStructure s;
  const double delta = cfg.resolved_delta();
  const double Delta = static_cast<double>(cfg.delta_bound);

  // L: smallest integer with (1+delta)^{L-1} >= Delta. Levels run 0..L so
  // the top level exceeds even the snapped diameter.
  int L = 1;
  {
    double lg = std::log(Delta) / std::log1p(delta);
    L = std::max(1, static_cast<int>(std::ceil(lg)) + 1);
    while (std::pow(1.0 + delta, L - 1) < Delta) ++L;
    while (L >= 2 && std::pow(1.0 + delta, L - 2) >= Delta) --L;
  }
  s.level_count_exponent = L;
  s.levels.resize(L + 1);
  for (int i = 0; i <= L; ++i) s.levels[i] = std::pow(1.0 + delta, i);

  const double log2Delta = std::log2(Delta);
  if (std::pow(Delta, cfg.epsilon) < log2Delta * log2Delta)
    s.warnings.push_back("Delta^epsilon < log^2(Delta): epsilon too small for this Delta");

  const int nblocks = std::max(1, static_cast<int>(std::ceil(1.0 / cfg.epsilon - 1e-9)));
  const double beta = cfg.resolved_beta();
  s.blocks.resize(nblocks);
  for (int i = 0; i < nblocks; ++i) {
    LevelBlock& b = s.blocks[i];
    b.anchor = std::pow(Delta, i * cfg.epsilon);
    double side = b.anchor / (cfg.dimension * beta);
    b.side_exp = static_cast<int>(std::floor(std::log2(side)));
    b.first_level = 0;
    b.last_level = -1;
  }

  s.level_block.resize(L + 1);
  for (int i = 0; i <= L; ++i) {
    double t = s.levels[i];
    int blk = 0;
    while (blk + 1 < nblocks && s.blocks[blk + 1].anchor <= t * (1.0 + 1e-12)) ++blk;
    s.level_block[i] = blk;
    if (s.blocks[blk].last_level < 0) s.blocks[blk].first_level = i;
    s.blocks[blk].last_level = i;
  }
  return s;
}

ShiftedGrids::ShiftedGrids(const QuadtreeConfig& cfg, const LevelStructure& structure)
    : dimension_(cfg.dimension) {
  int gmin = structure.blocks.front().side_exp;
  for (const auto& b : structure.blocks) gmin = std::min(gmin, b.side_exp);
  unit_exp_ = std::min(gmin, 0) - 1;
  scale_ = std::ldexp(1.0, -unit_exp_);

  side_fine_.resize(structure.blocks.size());
  for (size_t i = 0; i < structure.blocks.size(); ++i) {
    int shift_bits = structure.blocks[i].side_exp - unit_exp_;
    if (shift_bits < 1 || shift_bits > 62) throw std::runtime_error("quadtree: side out of range");
    side_fine_[i] = int64_t{1} << shift_bits;
  }

  // Random shift from [0, Delta/2)^d, drawn on the fine lattice.
  Rng rng(cfg.seed, role_tag("quadtree-shift"));
  int64_t span = std::max<int64_t>(1, (cfg.delta_bound / 2) << (-unit_exp_));
  shift_fine_.resize(dimension_);
  for (int i = 0; i < dimension_; ++i)
    shift_fine_[i] = static_cast<int64_t>(rng.next_below(static_cast<uint64_t>(span)));
}

Point ShiftedGrids::snap(int block, const Point& input) const {
  const int64_t s = side_fine_[block];
  Point out;
  out.coords.resize(dimension_);
  for (int i = 0; i < dimension_; ++i) {
    int64_t c = (input.coords[i] << (-unit_exp_)) + shift_fine_[i];
    int64_t k = c / s;  // c >= 0 because input coords >= 1 and shift >= 0
    out.coords[i] = k * s + s / 2;
  }
  return out;
}

double ShiftedGrids::snap_radius(int block) const {
  return 0.5 * dimension_ * static_cast<double>(side_fine_[block]) / scale_;
}

double DiscretizedLevel::distance_input(const Point& a, const Point& b) const {
  return std::ldexp(static_cast<double>(l1_distance(a, b)), unit_exp);
}

double DiscretizedLevel::threshold_fine(double t_input) const {
  return std::ldexp(t_input, -unit_exp);
}

DiscretizedLevel vertex_set(const QuadtreeConfig& cfg, const ShiftedGrids& grids,
                            const LevelStructure& structure, int block, const PointMultiset& P) {
  DiscretizedLevel lvl;
  lvl.anchor = structure.blocks[block].anchor;
  lvl.block = block;
  lvl.unit_exp = grids.unit_exp();
  lvl.side_fine = grids.side_fine(block);
  lvl.snap_radius = grids.snap_radius(block);
  for (const auto& [p, c] : P.counts()) lvl.vertices.add(grids.snap(block, p), c);
  (void)cfg;
  return lvl;
}

std::vector<DiscretizedLevel> all_vertex_sets(const QuadtreeConfig& cfg, const ShiftedGrids& grids,
                                              const LevelStructure& structure,
                                              const PointMultiset& P) {
  std::vector<DiscretizedLevel> out;
  out.reserve(structure.blocks.size());
  for (size_t b = 0; b < structure.blocks.size(); ++b)
    out.push_back(vertex_set(cfg, grids, structure, static_cast<int>(b), P));
  return out;
}

double quadtree_cost(const QuadtreeConfig& cfg, const LevelStructure& structure,
                     const std::vector<DiscretizedLevel>& per_block) {
  double beta = cfg.resolved_beta();
  double total = 0;
  for (size_t b = 0; b < structure.blocks.size(); ++b) {
    double vt = static_cast<double>(per_block[b].vertices.distinct_size());
    total += structure.blocks[b].anchor / beta * (vt - 1.0);
  }
  return total;
}

int64_t delta_bound_for(const PointMultiset& P) {
  auto pts = P.support();
  int64_t diam = 0;
  for (size_t i = 0; i < pts.size(); ++i)
    for (size_t j = i + 1; j < pts.size(); ++j) diam = std::max(diam, l1_distance(pts[i], pts[j]));
  int64_t d = 2;
  while (d < diam) d <<= 1;
  return d;
}

}  // namespace emst
