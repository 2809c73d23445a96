#pragma once

// Randomly shifted nested grids, the level/block structure, and the
// discretized vertex multisets V_T.
//
// Exactness scheme: the nominal cell side T/(d*beta) at each block anchor
// is rounded DOWN to a power of two 2^g. Sides at successive anchors are
// then automatic integer multiples of each other, and with one shared
// shift vector the grids nest bit-exactly. All snapped centers live on the
// half-side lattice of the finest grid ("fine units" of 2^unit_exp input
// units), so vertex coordinates are plain integers.

#include <cstdint>
#include <string>
#include <vector>

#include "emst/geometry.hpp"

namespace emst {

struct QuadtreeConfig {
  int dimension = 1;
  int64_t lambda = 1;
  int64_t delta_bound = 2;  // aspect bound, power of two, >= max distance
  double epsilon = 0.5;
  int alpha = 2;
  double beta = 0;   // 0 -> default max(10*d, 10/delta)
  double delta = 0;  // 0 -> min(1/100, 1/(epsilon*alpha))
  uint64_t seed = 1;

  static QuadtreeConfig make(int dimension, int64_t lambda, int64_t delta_bound, double epsilon,
                             int alpha, uint64_t seed);

  // Enforces: delta <= 1/100 cap, beta*delta >= 10, delta_bound power of 2.
  void validate() const;
  double resolved_delta() const;
  double resolved_beta() const;
};

struct LevelBlock {
  double anchor = 1;       // T = Delta^{(i-1)*eps}
  int side_exp = 0;        // grid side 2^side_exp input units
  int first_level = 0;     // index range of levels using this block
  int last_level = -1;
};

struct LevelStructure {
  std::vector<double> levels;   // (1+delta)^i for i = 0..L
  int level_count_exponent = 0;  // L: smallest integer with (1+delta)^{L-1} >= Delta
  std::vector<LevelBlock> blocks;
  std::vector<int> level_block;  // block index per level
  std::vector<std::string> warnings;

  int block_of_level(int level_index) const { return level_block[level_index]; }
};

// Levels cover [1, Delta] with one overshoot level; blocks partition them
// at the powers Delta^{i*eps}, ceil(1/eps) blocks in total.
LevelStructure build_levels(const QuadtreeConfig& cfg);

// The realized random shift and per-block grid geometry.
class ShiftedGrids {
 public:
  ShiftedGrids(const QuadtreeConfig& cfg, const LevelStructure& structure);

  int unit_exp() const { return unit_exp_; }            // fine unit = 2^unit_exp input units
  double fine_units_per_input() const { return scale_; }  // 2^-unit_exp
  int64_t side_fine(int block) const { return side_fine_[block]; }
  const std::vector<int64_t>& shift_fine() const { return shift_fine_; }

  // Snaps an input point to its cell center at the block's grid. The
  // returned point is in fine units (translated by the shared shift).
  Point snap(int block, const Point& input) const;

  // l1 snap error bound in input units: d * side / 2 <= T/beta.
  double snap_radius(int block) const;

 private:
  int dimension_;
  int unit_exp_;
  double scale_;
  std::vector<int64_t> side_fine_;
  std::vector<int64_t> shift_fine_;
};

struct DiscretizedLevel {
  double anchor = 1;
  int block = 0;
  int unit_exp = 0;       // vertex coords are in units of 2^unit_exp
  int64_t side_fine = 1;  // cell side in fine units
  double snap_radius = 0;  // in input units
  PointMultiset vertices;  // cell centers -> multiplicity

  // Distance between two vertices in input units.
  double distance_input(const Point& a, const Point& b) const;
  // Threshold t (input units) expressed in fine units for exact compares.
  double threshold_fine(double t_input) const;
};

// Image of P under the block's snap, multiplicities summed.
DiscretizedLevel vertex_set(const QuadtreeConfig& cfg, const ShiftedGrids& grids,
                            const LevelStructure& structure, int block, const PointMultiset& P);

// All blocks at once (levels within a block share the vertex set).
std::vector<DiscretizedLevel> all_vertex_sets(const QuadtreeConfig& cfg, const ShiftedGrids& grids,
                                              const LevelStructure& structure,
                                              const PointMultiset& P);

// Sum over block anchors of (T/beta) * (|V_T| - 1).
double quadtree_cost(const QuadtreeConfig& cfg, const LevelStructure& structure,
                     const std::vector<DiscretizedLevel>& per_block);

// Smallest power of two >= max pairwise l1 distance (>= 2).
int64_t delta_bound_for(const PointMultiset& P);

}  // namespace emst
