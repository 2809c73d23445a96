#pragma once

// The one-pass-friendly estimator: point classification by ball growth in
// powers of 1/eps, the per-level trial (uniform j in [-1..tau] dispatching
// to the dead / intermediate / complete procedures over two LSH bucket
// structures), and the aggregate estimator R = (4/eps) * sum_t V_t * t * Z_t
// over the power-of-two levels.
//
// Reference mode materializes buckets exactly; sketch mode recovers the
// sampled buckets through the recursive l_p sampler and only ever touches
// the stream through linear updates.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "emst/components.hpp"
#include "emst/lsh.hpp"
#include "emst/quadtree.hpp"
#include "emst/recsampler.hpp"

namespace emst {

struct OnePassConfig {
  double epsilon = 0.25;       // 1/eps a power of 2, eps <= 1/4
  double size_threshold = 64;  // stand-in for beta^2 Delta^{10 eps}
  int samples_per_level = 200;
  double min_distance_target = 0;  // 0 -> ceil(1/eps^3); inputs are scaled to meet it
  int retry_budget = 0;            // 0 -> 10 * (1-2eps)^{-2d} * (tau+2)
  uint64_t seed = 1;
  int64_t anchor_cap = 2'000'000;
  double beta = 0;  // grid fineness for V_t (0 -> 10 * d)

  bool sketch_mode = false;
  bool sketch_diameter = false;  // use the diameter sketch instead of the oracle
  // sketch-mode spaces and tower shape
  int bucket_space_bits = 12;
  int rs_samples = 0;  // 0 -> auto from the size threshold
  int rs_rows = 5;
  int rs_buckets = 64;
  int rs_reps = 17;

  void validate() const;
  int tau_for(int64_t delta_bound) const;
  double survive_both_prob(int dimension) const;  // (1-2eps)^{2d}
};

struct PointClass {
  bool very_dead = false;
  bool dead = false;
  int type = -1;  // smallest l in [0, tau] with the type property, -1 if none
  bool nearly_complete = false;
  bool complete = false;
  int complete_level = -1;
};

struct LevelSample {
  bool fail = true;
  double z = 0;
  int vertex = -1;  // index into the level's vertex list
};

struct TrialStats {
  int64_t iterations = 0;       // while-loop iterations executed
  int64_t returned = 0;         // iterations that produced a sample
  int64_t sampled_survived = 0; // iterations whose sampled point survived both testers
  int64_t gates_passed = 0;     // iterations that reached the tester stage
  int64_t budget_exhausted = 0; // trials dropped by the retry budget
  int64_t sketch_rejects = 0;   // sketch-mode batch self-check rejections
};

// Per-level machinery shared by all trials of one level (reference mode
// hashes every vertex; sketch mode replays the support as a stream).
class OnePassLevel {
 public:
  OnePassLevel(const OnePassConfig& cfg, const BlockGraph& graph, double t_input, int tau,
               int64_t delta_bound, const Centering& centering);

  PointClass classify(int v) const;

  // One while-loop iteration: draws j uniformly from [-1..tau], runs the
  // matching procedure. `per_j` forces a specific j (tests).
  LevelSample trial_once(uint64_t trial_seed, TrialStats* stats, int force_j = -2) const;

  // Retry-until-success with the configured budget.
  LevelSample trial(uint64_t trial_seed, TrialStats* stats) const;

  int vertex_count() const { return graph_->size(); }
  const BlockGraph& graph() const { return *graph_; }
  double level() const { return t_input_; }
  int tau() const { return tau_; }

  // Scales of the two hash functions used for a given j.
  std::pair<double, double> scales_for(int j) const;

 private:
  struct BucketStructure;
  LevelSample run_procedure(int j, uint64_t iter_seed, TrialStats* stats) const;
  LevelSample run_procedure_reference(int j, uint64_t iter_seed, TrialStats* stats) const;
  LevelSample run_procedure_sketch(int j, uint64_t iter_seed, TrialStats* stats) const;
  bool singleton_certified(double coarse_scale) const;

  const OnePassConfig* cfg_;
  const BlockGraph* graph_;
  double t_input_;
  double t_fine_;
  int tau_;
  int64_t delta_bound_;
  const Centering* centering_;
  std::vector<Point> centered_;   // centered vertex points (input units)
  double min_pair_dist_ = 0;      // minimum pairwise distance, input units
  ComponentPartition components_;
};

struct OnePassLevelReport {
  double t = 0;
  int vertex_count = 0;
  double hat_v = 0;
  double mean_z = 0;
  int samples_ok = 0;
  TrialStats stats;
  std::vector<int> class_histogram;  // very_dead, dead, type buckets, nearly_complete
};

struct OnePassResult {
  double estimate = 0;         // R, in original input units
  int64_t scale_applied = 1;   // power-of-two input scaling for the min-distance precondition
  int64_t delta_bound = 2;     // Delta used (scaled units)
  double survive_prob = 0;     // (1-2eps)^{2d}
  std::vector<OnePassLevelReport> levels;
  std::vector<std::string> warnings;
};

OnePassResult run_onepass(const OnePassConfig& cfg, const PointMultiset& P);

// R = (4/eps) * sum over power-of-two levels of hat_v * t * mean_z.
double estimator_R(double epsilon, const std::vector<OnePassLevelReport>& levels);

}  // namespace emst
