#include "emst/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "emst/oracle.hpp"
#include "emst/prng.hpp"

namespace emst {

namespace {

double head_term(const QuadtreeConfig& cfg, const LevelStructure& s, const PointMultiset& P) {
  double n = static_cast<double>(P.distinct_size());
  return n - std::pow(1.0 + cfg.resolved_delta(), s.level_count_exponent + 1);
}

}  // namespace

EstimateValue ideal_estimator(const QuadtreeConfig& cfg, const LevelStructure& structure,
                              const std::vector<DiscretizedLevel>& per_block,
                              const PointMultiset& P) {
  EstimateValue out;
  out.warnings = structure.warnings;
  const double delta = cfg.resolved_delta();
  double acc = 0;
  for (size_t b = 0; b < structure.blocks.size(); ++b) {
    const auto& blk = structure.blocks[b];
    if (blk.last_level < 0) continue;
    BlockGraph graph(per_block[b]);
    LevelSweep sweep(graph);
    for (int i = blk.first_level; i <= blk.last_level; ++i) {
      double t = structure.levels[i];
      sweep.advance_to(per_block[b].threshold_fine(t));
      double ct = static_cast<double>(sweep.component_count());
      acc += t * ct;  // sum_p x_t(p) = c_t
      out.levels.push_back({t, static_cast<int>(b), graph.size(), ct});
    }
  }
  out.value = head_term(cfg, structure, P) + delta * acc;
  return out;
}

namespace {

// Shared Z computation: for each level and vertex, min(y, z(alpha)) where z
// is derived from one BFS profile reused across all requested alphas.
std::vector<double> z_core(const QuadtreeConfig& cfg, const LevelStructure& structure,
                           const std::vector<DiscretizedLevel>& per_block, const PointMultiset& P,
                           const EstimatorParams& params, const std::vector<int>& alphas,
                           EstimateValue* diag) {
  const double delta = cfg.resolved_delta();
  const int max_alpha = *std::max_element(alphas.begin(), alphas.end());
  std::vector<double> acc(alphas.size(), 0.0);

  for (size_t b = 0; b < structure.blocks.size(); ++b) {
    const auto& blk = structure.blocks[b];
    if (blk.last_level < 0) continue;
    BlockGraph graph(per_block[b]);
    for (int i = blk.first_level; i <= blk.last_level; ++i) {
      double t = structure.levels[i];
      ThresholdGraphView view(graph, t);
      double level_sum_first = 0;
      for (int v = 0; v < graph.size(); ++v) {
        double y = y_value(view, v, params);
        if (y == 0.0) continue;  // min(y, z) = 0 regardless of alpha
        auto bfs = bfs_limited(view, v, max_alpha, params.size_threshold);
        for (size_t a = 0; a < alphas.size(); ++a) {
          int rounds = alphas[a];
          // size_at_round is exact up to the overflow round and stays at its
          // final value once the BFS stabilizes, so indexing with min() gives
          // the hop-`rounds` ball size (or a value >= threshold on overflow).
          int reached = bfs.size_at_round[std::min<size_t>(rounds, bfs.size_at_round.size() - 1)];
          double z = (static_cast<double>(reached) >= params.size_threshold)
                         ? 0.0
                         : 1.0 / static_cast<double>(reached);
          double m = std::min(y, z);
          acc[a] += t * m;
          if (a == 0) level_sum_first += m;
        }
      }
      if (diag) diag->levels.push_back({t, static_cast<int>(b), graph.size(), level_sum_first});
    }
  }
  std::vector<double> out(alphas.size());
  for (size_t a = 0; a < alphas.size(); ++a)
    out[a] = head_term(cfg, structure, P) + delta * acc[a];
  return out;
}

}  // namespace

EstimateValue estimator_Z(const QuadtreeConfig& cfg, const LevelStructure& structure,
                          const std::vector<DiscretizedLevel>& per_block, const PointMultiset& P,
                          const EstimatorParams& params) {
  EstimateValue out;
  out.warnings = structure.warnings;
  auto vals = z_core(cfg, structure, per_block, P, params, {params.bfs_rounds}, &out);
  out.value = vals[0];
  if (P.distinct_size() == 1) out.warnings.push_back("degenerate instance: single distinct point");
  return out;
}

std::vector<double> estimator_Z_multi_alpha(const QuadtreeConfig& cfg,
                                            const LevelStructure& structure,
                                            const std::vector<DiscretizedLevel>& per_block,
                                            const PointMultiset& P, const EstimatorParams& params,
                                            const std::vector<int>& alphas) {
  return z_core(cfg, structure, per_block, P, params, alphas, nullptr);
}

EstimateValue sampled_estimator(const QuadtreeConfig& cfg, const LevelStructure& structure,
                                const std::vector<DiscretizedLevel>& per_block,
                                const PointMultiset& P, const EstimatorParams& params,
                                const SampledEstimatorOptions& opts) {
  EstimateValue out;
  const double delta = cfg.resolved_delta();
  Rng rng(opts.seed, role_tag("sampled-estimator"));
  double acc = 0;
  int level_index = 0;
  for (size_t b = 0; b < structure.blocks.size(); ++b) {
    const auto& blk = structure.blocks[b];
    if (blk.last_level < 0) continue;
    BlockGraph graph(per_block[b]);
    for (int i = blk.first_level; i <= blk.last_level; ++i, ++level_index) {
      double t = structure.levels[i];
      ThresholdGraphView view(graph, t);
      const int n = graph.size();
      double mean;
      if (opts.mode == SampleMode::Exhaustive) {
        double s = 0;
        for (int v = 0; v < n; ++v)
          s += std::min(y_value(view, v, params), z_value(view, v, params));
        mean = s / n;
      } else {
        double s = 0;
        for (int k = 0; k < opts.samples_per_level; ++k) {
          int v = static_cast<int>(rng.next_below(static_cast<uint64_t>(n)));
          s += std::min(y_value(view, v, params), z_value(view, v, params));
        }
        mean = s / opts.samples_per_level;
      }
      double nhat = opts.hat_n ? (*opts.hat_n)[level_index] : static_cast<double>(n);
      acc += t * nhat * mean;
      out.levels.push_back({t, static_cast<int>(b), n, mean});
    }
  }
  double n0 = opts.hat_n0 ? *opts.hat_n0 : static_cast<double>(P.distinct_size());
  out.value = n0 - std::pow(1.0 + delta, structure.level_count_exponent + 1) + delta * acc;
  return out;
}

SandwichCheck cs_sandwich_check(const PointMultiset& P, double epsilon) {
  if (epsilon <= 0) throw std::invalid_argument("cs_sandwich_check: epsilon > 0");
  auto pts = P.support();
  const int n = static_cast<int>(pts.size());
  SandwichCheck out;
  out.mst = static_cast<double>(mst_oracle(P).cost);

  int64_t dmax = 1;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      int64_t d = l1_distance(pts[i], pts[j]);
      if (d < 1) throw std::invalid_argument("cs_sandwich_check: pairwise distance below 1");
      dmax = std::max(dmax, d);
    }

  int h = 0;
  long double Delta = 1;
  while (Delta < static_cast<long double>(dmax)) {
    Delta *= (1 + static_cast<long double>(epsilon));
    ++h;
  }

  // c*_t via one Kruskal-style sweep over sorted pairs.
  std::vector<std::pair<int64_t, std::pair<int, int>>> edges;
  edges.reserve(static_cast<size_t>(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) edges.push_back({l1_distance(pts[i], pts[j]), {i, j}});
  std::sort(edges.begin(), edges.end());

  std::vector<int> parent(n);
  for (int i = 0; i < n; ++i) parent[i] = i;
  std::function<int(int)> find = [&](int v) {
    while (parent[v] != v) {
      parent[v] = parent[parent[v]];
      v = parent[v];
    }
    return v;
  };
  int comps = n;
  size_t next = 0;
  long double sum = 0;
  long double level = 1;
  for (int i = 0; i < h; ++i) {  // levels (1+eps)^0 .. (1+eps)^{h-1}
    while (next < edges.size() &&
           static_cast<long double>(edges[next].first) <= level * (1 + 1e-15L)) {
      int a = find(edges[next].second.first), b = find(edges[next].second.second);
      ++next;
      if (a != b) {
        parent[a] = b;
        --comps;
      }
    }
    sum += level * comps;
    level *= (1 + static_cast<long double>(epsilon));
  }

  long double value = n - Delta + static_cast<long double>(epsilon) * sum;
  out.value = static_cast<double>(value);
  const double tol = 1e-9 * std::max(1.0, out.mst);
  out.lower_ok = out.mst <= out.value + tol;
  out.upper_ok = out.value <= (1.0 + epsilon) * out.mst + tol;
  return out;
}

}  // namespace emst
