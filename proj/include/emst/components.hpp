#pragma once

// Threshold graphs over a discretized level, connected components, bounded
// BFS, and the per-point quantities x_t, y_t, z_t. Adjacency is resolved by
// brute-force pairwise distance checks (desk scale); per-vertex sorted
// distance arrays back the ball queries.

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "emst/quadtree.hpp"

namespace emst {

struct EstimatorParams {
  double size_threshold = 64;  // stand-in for beta^2 * Delta^{10 eps}
  int bfs_rounds = 2;          // alpha
  int log_level_count = 1;     // ceil(log2 L)

  static EstimatorParams from(const QuadtreeConfig& cfg, const LevelStructure& s,
                              double size_threshold = 64);
};

// Vertex-indexed view of one block's support with cached sorted distances.
class BlockGraph {
 public:
  explicit BlockGraph(const DiscretizedLevel& level);

  const DiscretizedLevel& level() const { return *level_; }
  int size() const { return static_cast<int>(verts_.size()); }
  const Point& vertex(int i) const { return verts_[i]; }
  const std::vector<Point>& vertices() const { return verts_; }
  int64_t multiplicity(int i) const { return mult_[i]; }
  std::optional<int> index_of(const Point& p) const;

  int64_t dist_fine(int i, int j) const;
  int64_t min_pairwise_distance() const;  // 0 when fewer than two vertices

  // Vertices within fine-unit distance r of vertex i (inclusive, contains i),
  // returned in ascending index (= lexicographic) order.
  std::vector<int> ball(int i, double r_fine) const;
  int ball_count(int i, double r_fine) const;

 private:
  const DiscretizedLevel* level_;
  std::vector<Point> verts_;
  std::vector<int64_t> mult_;
  // per-vertex (distance, index), sorted by distance then index
  std::vector<std::vector<std::pair<int64_t, int32_t>>> sorted_;
};

// Adjacency rule (p,q) in E_t iff ||p-q||_1 <= t, self loops excluded.
struct ThresholdGraphView {
  const BlockGraph* graph;
  double t_input;  // level value in input units
  double t_fine;   // same threshold in fine units

  ThresholdGraphView(const BlockGraph& g, double t);
  bool adjacent(int i, int j) const;
  std::vector<int> neighbors(int i) const;  // ascending index order
};

struct ComponentPartition {
  std::vector<int> comp_id;
  std::vector<int> comp_size;  // indexed by component id
  int count = 0;

  int size_of_vertex(int v) const { return comp_size[comp_id[v]]; }
};

ComponentPartition connected_components(const ThresholdGraphView& g);

// x_t(p) = 1 / |CC(p, G_t)|.
double x_value(const ComponentPartition& part, int v);

struct BfsResult {
  std::vector<int> explored;  // BFS order, deterministic
  bool overflow = false;      // explored set reached the cap
  std::vector<int> size_at_round;  // |explored| after rounds 0..alpha
};

// Bounded BFS: all vertices at hop distance <= rounds from v, aborting with
// the overflow flag as soon as the explored set reaches cap.
BfsResult bfs_limited(const ThresholdGraphView& g, int v, int rounds, double cap);

// y_t(p): ball-growth capped inverse component size. 0 when the unit ball
// already exceeds the size threshold.
double y_value(const ThresholdGraphView& g, int v, const EstimatorParams& params);

// z_t(p): inverse size of the alpha-round BFS, 0 on overflow.
double z_value(const ThresholdGraphView& g, int v, const EstimatorParams& params);

// Incremental component tracking while t sweeps upward through one block.
class LevelSweep {
 public:
  explicit LevelSweep(const BlockGraph& g);

  void advance_to(double t_fine);  // activate all edges with distance <= t_fine
  int component_count() const { return count_; }
  int comp_size_of(int v) const;
  uint64_t version() const { return version_; }  // bumps on every union

 private:
  int find(int v) const;
  const BlockGraph* g_;
  std::vector<std::pair<int64_t, std::pair<int32_t, int32_t>>> edges_;  // sorted by distance
  size_t next_edge_ = 0;
  mutable std::vector<int> parent_;
  std::vector<int> size_;
  int count_ = 0;
  uint64_t version_ = 0;
};

}  // namespace emst
