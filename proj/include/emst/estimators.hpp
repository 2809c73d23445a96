#pragma once

// The exact (non-sketch) estimators: the component-count sandwich on true
// threshold graphs, the ideal estimator, the alternative estimator Z built
// from min(y_t, z_t), and its sampled variant.

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "emst/components.hpp"
#include "emst/quadtree.hpp"

namespace emst {

struct LevelDiagnostics {
  double t = 0;
  int block = 0;
  int vertex_count = 0;
  double min_sum = 0;  // sum over p of min(y_t, z_t)
};

struct EstimateValue {
  double value = 0;
  std::vector<LevelDiagnostics> levels;
  std::vector<std::string> warnings;
};

// n - (1+delta)^{L+1} + delta * sum_t t * c_t (uses sum_p x_t(p) = c_t).
EstimateValue ideal_estimator(const QuadtreeConfig& cfg, const LevelStructure& structure,
                              const std::vector<DiscretizedLevel>& per_block,
                              const PointMultiset& P);

// Z = n - (1+delta)^{L+1} + delta * sum_t t * sum_p min(y_t(p), z_t(p)).
// When alpha_overrides is nonempty, returns one value per requested alpha,
// sharing the per-vertex BFS profiles across them.
EstimateValue estimator_Z(const QuadtreeConfig& cfg, const LevelStructure& structure,
                          const std::vector<DiscretizedLevel>& per_block, const PointMultiset& P,
                          const EstimatorParams& params);

std::vector<double> estimator_Z_multi_alpha(const QuadtreeConfig& cfg,
                                            const LevelStructure& structure,
                                            const std::vector<DiscretizedLevel>& per_block,
                                            const PointMultiset& P, const EstimatorParams& params,
                                            const std::vector<int>& alphas);

enum class SampleMode { IidUniform, Exhaustive };

struct SampledEstimatorOptions {
  int samples_per_level = 16;
  SampleMode mode = SampleMode::IidUniform;
  uint64_t seed = 1;
  // Per-level support-size estimates; exact sizes when absent.
  std::optional<std::vector<double>> hat_n;
  std::optional<double> hat_n0;
};

EstimateValue sampled_estimator(const QuadtreeConfig& cfg, const LevelStructure& structure,
                                const std::vector<DiscretizedLevel>& per_block,
                                const PointMultiset& P, const EstimatorParams& params,
                                const SampledEstimatorOptions& opts);

struct SandwichCheck {
  double value = 0;
  double mst = 0;
  bool lower_ok = false;  // MST <= value
  bool upper_ok = false;  // value <= (1+eps) * MST
};

// Component-count sandwich on the TRUE threshold graphs (no discretization):
// MST <= n - Delta + eps * sum_i (1+eps)^i * c*_{(1+eps)^i} <= (1+eps) MST
// with Delta = (1+eps)^h covering all pairwise distances. Throws if some
// pairwise distance is below 1.
SandwichCheck cs_sandwich_check(const PointMultiset& P, double epsilon);

}  // namespace emst
