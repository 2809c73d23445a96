#include "emst/onepass.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "emst/oracle.hpp"
#include "emst/prng.hpp"
#include "emst/sketch/l0_sampler.hpp"
#include "emst/vertex_codec.hpp"

namespace emst {

namespace {

constexpr uint64_t kRoleTrial = role_tag("onepass-trial");
constexpr uint64_t kRoleHash1 = role_tag("onepass-h1");
constexpr uint64_t kRoleHash2 = role_tag("onepass-h2");
constexpr uint64_t kRoleFast = role_tag("onepass-fastpath");
constexpr uint64_t kRoleCount = role_tag("onepass-count");
constexpr uint64_t kRoleRs = role_tag("onepass-rs");
constexpr uint64_t kRoleCompact = role_tag("onepass-compact");

bool is_pow2_int(int64_t v) { return v > 0 && (v & (v - 1)) == 0; }

}  // namespace

void OnePassConfig::validate() const {
  double inv = 1.0 / epsilon;
  if (epsilon <= 0 || epsilon > 0.25 + 1e-12 ||
      std::fabs(inv - std::round(inv)) > 1e-9 ||
      !is_pow2_int(static_cast<int64_t>(std::round(inv))))
    throw std::invalid_argument("onepass: 1/epsilon must be a power of 2 and epsilon <= 1/4");
  if (size_threshold < 1) throw std::invalid_argument("onepass: size_threshold >= 1");
  if (samples_per_level < 1) throw std::invalid_argument("onepass: samples_per_level >= 1");
}

int OnePassConfig::tau_for(int64_t delta_bound) const {
  double log_delta = std::log2(static_cast<double>(std::max<int64_t>(delta_bound, 2)));
  double tau = std::log(log_delta) / std::log(1.0 / epsilon) + 3.0;
  return std::max(3, static_cast<int>(std::ceil(tau - 1e-9)));
}

double OnePassConfig::survive_both_prob(int dimension) const {
  return std::pow(1.0 - 2.0 * epsilon, 2 * dimension);
}

OnePassLevel::OnePassLevel(const OnePassConfig& cfg, const BlockGraph& graph, double t_input,
                           int tau, int64_t delta_bound, const Centering& centering)
    : cfg_(&cfg),
      graph_(&graph),
      t_input_(t_input),
      t_fine_(graph.level().threshold_fine(t_input)),
      tau_(tau),
      delta_bound_(delta_bound),
      centering_(&centering) {
  centered_.reserve(graph.size());
  for (int v = 0; v < graph.size(); ++v) centered_.push_back(centering.apply(graph.vertex(v)));
  min_pair_dist_ = static_cast<double>(graph.min_pairwise_distance());
  ThresholdGraphView view(graph, t_input);
  components_ = connected_components(view);
}

std::pair<double, double> OnePassLevel::scales_for(int j) const {
  const double eps = cfg_->epsilon;
  if (j == -1) return {t_input_ / eps, t_input_ / (eps * eps * eps)};
  double t1 = t_input_ * std::pow(1.0 / eps, j);
  return {t1, t1 / (eps * eps)};
}

PointClass OnePassLevel::classify(int v) const {
  const double theta = cfg_->size_threshold;
  const double inv_eps = 1.0 / cfg_->epsilon;
  PointClass pc;
  auto ball_at = [&](double radius_input) {
    return graph_->ball_count(v, graph_->level().threshold_fine(radius_input));
  };
  pc.very_dead = ball_at(t_input_) > theta;
  pc.dead = ball_at(t_input_ * inv_eps) > theta;
  // Ball sizes are monotone in the radius; the type is the unique crossing.
  double r = t_input_;
  int prev = ball_at(r);
  for (int l = 0; l <= tau_; ++l) {
    int above = ball_at(r * inv_eps);
    if (above > theta && prev <= theta) {
      pc.type = l;
      break;
    }
    prev = above;
    r *= inv_eps;
  }
  pc.nearly_complete = ball_at(t_input_ * std::pow(inv_eps, tau_ + 1)) <= theta;
  // l-complete: type l+3 and the whole component inside B(p, t/eps^l).
  if (pc.type >= 3) {
    int l = pc.type - 3;
    if (l >= 0 && l < tau_) {
      double radius = graph_->level().threshold_fine(t_input_ * std::pow(inv_eps, l));
      bool inside = true;
      for (int u = 0; u < graph_->size() && inside; ++u)
        if (components_.comp_id[u] == components_.comp_id[v] &&
            static_cast<double>(graph_->dist_fine(v, u)) > radius)
          inside = false;
      if (inside) {
        pc.complete = true;
        pc.complete_level = l;
      }
    }
  }
  return pc;
}

bool OnePassLevel::singleton_certified(double coarse_scale_input) const {
  if (graph_->size() <= 1) return true;
  // Bucket diameter bound for precision 2*eps at scale s is s/eps; if that
  // is below the minimum pairwise distance every bucket is a singleton.
  double bound_fine = graph_->level().threshold_fine(coarse_scale_input / cfg_->epsilon);
  return bound_fine < min_pair_dist_;
}

LevelSample OnePassLevel::trial_once(uint64_t trial_seed, TrialStats* stats, int force_j) const {
  if (stats) ++stats->iterations;
  int j;
  if (force_j >= -1) {
    j = force_j;
  } else {
    Rng rng(trial_seed, kRoleTrial);
    j = static_cast<int>(rng.next_below(static_cast<uint64_t>(tau_ + 2))) - 1;
  }
  LevelSample out = run_procedure(j, trial_seed, stats);
  if (stats && !out.fail) ++stats->returned;
  return out;
}

LevelSample OnePassLevel::trial(uint64_t trial_seed, TrialStats* stats) const {
  int budget = cfg_->retry_budget;
  if (budget <= 0) {
    double p = cfg_->survive_both_prob(static_cast<int>(centered_[0].dim()));
    budget = static_cast<int>(std::ceil(10.0 / p * (tau_ + 2)));
  }
  for (int it = 0; it < budget; ++it) {
    LevelSample s = trial_once(prf64(trial_seed, kRoleTrial, it), stats);
    if (!s.fail) return s;
  }
  if (stats) ++stats->budget_exhausted;
  return LevelSample{};
}

LevelSample OnePassLevel::run_procedure(int j, uint64_t iter_seed, TrialStats* stats) const {
  if (cfg_->sketch_mode) return run_procedure_sketch(j, iter_seed, stats);
  return run_procedure_reference(j, iter_seed, stats);
}

LevelSample OnePassLevel::run_procedure_reference(int j, uint64_t iter_seed,
                                                  TrialStats* stats) const {
  const double theta = cfg_->size_threshold;
  const int d = static_cast<int>(centered_[0].dim());
  auto [s1, s2] = scales_for(j);
  LevelSample fail{};

  // Fast path: when even the coarser hash cannot merge two vertices, the
  // bucket structure is fully determined. Sampling the trial this way is
  // distribution-identical to materializing the hashes; tester survival
  // keeps its exact (1-2eps)^{2d} probability.
  if (singleton_certified(s2)) {
    Rng rng(iter_seed, kRoleFast);
    int v = static_cast<int>(rng.next_below(static_cast<uint64_t>(graph_->size())));
    double sp = std::pow(1.0 - 2.0 * cfg_->epsilon, d);
    bool survived = rng.next_unit() < sp && rng.next_unit() < sp;
    if (stats) {
      if (survived) ++stats->sampled_survived;
    }
    if (theta <= 1) return fail;
    if (j == tau_) {
      if (stats) ++stats->gates_passed;
      if (!survived) return fail;
      return LevelSample{false, 1.0, v};  // CC of v inside its singleton bucket
    }
    return fail;  // j = -1: |cell| = 1 <= theta; 0 <= j < tau: |h2^-1(b)| = 1 <= theta
  }

  LshConfig c1, c2;
  c1.scale = graph_->level().threshold_fine(s1);
  c2.scale = graph_->level().threshold_fine(s2);
  c1.precision = c2.precision = 2.0 * cfg_->epsilon;
  c1.gamma_radius = c2.gamma_radius = centering_->gamma;
  c1.seed = prf64(iter_seed, kRoleHash1, 0);
  c2.seed = prf64(iter_seed, kRoleHash2, 0);
  c1.anchor_cap = c2.anchor_cap = cfg_->anchor_cap;
  LshFunction h1(c1), h2(c2);
  auto ids1 = h1.hash_all(centered_);
  auto ids2 = h2.hash_all(centered_);

  // Sampling b ~ |h2^-1(b)|, then c ~ |cell(b,c)|, then p ~ cell is the
  // uniform distribution over vertices; draw the vertex directly and read
  // its buckets.
  Rng rng(iter_seed, role_tag("onepass-pick"));
  int v = static_cast<int>(rng.next_below(static_cast<uint64_t>(graph_->size())));
  int64_t b = ids2[v], c = ids1[v];

  double bucket2 = 0, cell = 0;
  std::vector<int> cell_members;
  for (int u = 0; u < graph_->size(); ++u) {
    if (ids2[u] == b) {
      ++bucket2;
      if (ids1[u] == c) {
        ++cell;
        cell_members.push_back(u);
      }
    }
  }

  bool survived = h1.tester(centered_[v], ids1[v]) && h2.tester(centered_[v], ids2[v]);
  if (stats && survived) ++stats->sampled_survived;

  if (j == -1) {
    if (!(cell > theta)) return fail;  // j was not the correct level
    if (stats) ++stats->gates_passed;
    if (!survived) return fail;
    return LevelSample{false, 0.0, v};
  }
  if (j < tau_) {
    if (bucket2 <= theta) return fail;  // j was not the correct level
    if (cell > theta) return fail;      // j was the wrong level
  } else {
    if (cell > theta) return fail;
  }
  if (stats) ++stats->gates_passed;
  if (!survived) return fail;

  // z = 1 / |CC(v, G_t(B))| on the recovered bucket B.
  int cc = 0;
  {
    std::vector<char> seen(cell_members.size(), 0);
    int start = -1;
    for (size_t i = 0; i < cell_members.size(); ++i)
      if (cell_members[i] == v) start = static_cast<int>(i);
    std::vector<int> stack{start};
    seen[start] = 1;
    while (!stack.empty()) {
      int a = stack.back();
      stack.pop_back();
      ++cc;
      for (size_t i = 0; i < cell_members.size(); ++i)
        if (!seen[i] && static_cast<double>(graph_->dist_fine(cell_members[a], cell_members[i])) <=
                            t_fine_) {
          seen[i] = 1;
          stack.push_back(static_cast<int>(i));
        }
    }
  }
  return LevelSample{false, 1.0 / cc, v};
}

LevelSample OnePassLevel::run_procedure_sketch(int j, uint64_t iter_seed,
                                               TrialStats* stats) const {
  const double theta = cfg_->size_threshold;
  const int d = static_cast<int>(centered_[0].dim());
  auto [s1, s2] = scales_for(j);
  LevelSample fail{};

  if (singleton_certified(s2)) {  // same fast path as the reference mode
    Rng rng(iter_seed, kRoleFast);
    int v = static_cast<int>(rng.next_below(static_cast<uint64_t>(graph_->size())));
    double sp = std::pow(1.0 - 2.0 * cfg_->epsilon, d);
    bool survived = rng.next_unit() < sp && rng.next_unit() < sp;
    if (stats && survived) ++stats->sampled_survived;
    if (theta <= 1) return fail;
    if (j == tau_) {
      if (stats) ++stats->gates_passed;
      if (!survived) return fail;
      return LevelSample{false, 1.0, v};
    }
    return fail;
  }

  LshConfig c1, c2;
  c1.scale = graph_->level().threshold_fine(s1);
  c2.scale = graph_->level().threshold_fine(s2);
  c1.precision = c2.precision = 2.0 * cfg_->epsilon;
  c1.gamma_radius = c2.gamma_radius = centering_->gamma;
  c1.seed = prf64(iter_seed, kRoleHash1, 0);
  c2.seed = prf64(iter_seed, kRoleHash2, 0);
  c1.anchor_cap = c2.anchor_cap = cfg_->anchor_cap;
  LshFunction h1(c1), h2(c2);
  auto ids1 = h1.hash_all(centered_);
  auto ids2 = h2.hash_all(centered_);

  // Hierarchical universe: (compact h2 bucket, compact h1 bucket, vertex).
  const int64_t nbuckets = int64_t{1} << cfg_->bucket_space_bits;
  int64_t coord_bound = 0;
  for (const auto& p : centered_)
    for (auto cdd : p.coords)
      coord_bound = std::max<int64_t>(coord_bound, std::llabs(cdd));
  const int64_t shift = coord_bound + 1;
  VertexCodec codec(d, 2 * shift + 1);
  auto encode_pt = [&](const Point& p) {
    Point q = p;
    for (auto& cd : q.coords) cd += shift;
    return codec.encode(q);
  };
  const int64_t n3 = int64_t{1} << (codec.bits_per_coord() * d);
  if (codec.bits_per_coord() * d > 24)
    throw std::runtime_error("onepass sketch mode: point universe too large to scan");

  int S = cfg_->rs_samples;
  if (S <= 0)
    S = static_cast<int>(std::ceil(theta * (std::log(theta + 1) + 3.0)));
  RecSamplerShape shape = l0_mode_shape(nbuckets, nbuckets, n3, S, /*max_magnitude=*/
                                        graph_->level().vertices.total_size());
  shape.rows = cfg_->rs_rows;
  shape.buckets = cfg_->rs_buckets;
  shape.reps = cfg_->rs_reps;
  RecSamplerSketch rs(shape, prf64(iter_seed, kRoleRs, 0));

  auto compact = [&](int64_t id, uint64_t lane) {
    return static_cast<int64_t>(prf64(cfg_->seed, kRoleCompact, static_cast<uint64_t>(id), lane) &
                                (static_cast<uint64_t>(nbuckets) - 1));
  };
  for (int u = 0; u < graph_->size(); ++u)
    rs.update(compact(ids2[u], 2), compact(ids1[u], 1), static_cast<int64_t>(encode_pt(centered_[u])),
              graph_->multiplicity(u));

  auto batch = rs.sample_batch();
  if (!batch) {
    if (stats) ++stats->sketch_rejects;
    return fail;
  }

  // Decode samples back to vertices; compact-space collisions reject.
  auto to_vertex = [&](int64_t i3) -> int {
    Point q = codec.decode(static_cast<SketchIndex>(i3));
    for (auto& cd : q.coords) cd -= shift;
    for (int u = 0; u < graph_->size(); ++u)
      if (centered_[u] == q) return u;
    return -1;
  };

  std::vector<int> cell_members;  // distinct vertices sampled from cell (b, c_1)
  std::vector<char> seen_cell(graph_->size(), 0);
  std::vector<char> seen_b2(graph_->size(), 0);
  double bucket2_distinct = 0;
  for (int l1 = 0; l1 < S; ++l1) {
    for (int l2 = 0; l2 < S; ++l2) {
      int u = to_vertex(batch->i3[l1][l2]);
      if (u < 0) {
        if (stats) ++stats->sketch_rejects;
        return fail;
      }
      if (!seen_b2[u]) {
        seen_b2[u] = 1;
        ++bucket2_distinct;
      }
      if (l1 == 0 && !seen_cell[u]) {
        seen_cell[u] = 1;
        cell_members.push_back(u);
      }
    }
  }
  int v = to_vertex(batch->i3[0][0]);
  double cell_distinct = static_cast<double>(cell_members.size());

  bool survived = h1.tester(centered_[v], ids1[v]) && h2.tester(centered_[v], ids2[v]);
  if (stats && survived) ++stats->sampled_survived;

  if (j == -1) {
    if (!(cell_distinct > theta)) return fail;
    if (stats) ++stats->gates_passed;
    if (!survived) return fail;
    return LevelSample{false, 0.0, v};
  }
  if (j < tau_) {
    if (bucket2_distinct <= theta) return fail;
    if (cell_distinct > theta) return fail;
  } else {
    if (cell_distinct > theta) return fail;
  }
  if (stats) ++stats->gates_passed;
  if (!survived) return fail;

  int cc = 0;
  {
    std::vector<char> seen(cell_members.size(), 0);
    int start = -1;
    for (size_t i = 0; i < cell_members.size(); ++i)
      if (cell_members[i] == v) start = static_cast<int>(i);
    if (start < 0) return fail;
    std::vector<int> stack{start};
    seen[start] = 1;
    while (!stack.empty()) {
      int a = stack.back();
      stack.pop_back();
      ++cc;
      for (size_t i = 0; i < cell_members.size(); ++i)
        if (!seen[i] && static_cast<double>(graph_->dist_fine(cell_members[a], cell_members[i])) <=
                            t_fine_) {
          seen[i] = 1;
          stack.push_back(static_cast<int>(i));
        }
    }
  }
  return LevelSample{false, 1.0 / cc, v};
}

double estimator_R(double epsilon, const std::vector<OnePassLevelReport>& levels) {
  double acc = 0;
  for (const auto& lv : levels) acc += lv.hat_v * lv.t * lv.mean_z;
  return 4.0 / epsilon * acc;
}

namespace {

// Block anchors and grid exponents for the one-pass regime (delta plays no
// role here, so this bypasses the (1+delta) level machinery).
LevelStructure onepass_structure(const QuadtreeConfig& quad, double epsilon, double beta) {
  LevelStructure s;
  const double Delta = static_cast<double>(quad.delta_bound);
  int top = static_cast<int>(std::round(std::log2(Delta)));
  s.level_count_exponent = top;
  s.levels.resize(top + 1);
  for (int i = 0; i <= top; ++i) s.levels[i] = std::ldexp(1.0, i);

  const int nblocks = std::max(1, static_cast<int>(std::ceil(1.0 / epsilon - 1e-9)));
  s.blocks.resize(nblocks);
  for (int i = 0; i < nblocks; ++i) {
    LevelBlock& b = s.blocks[i];
    b.anchor = std::pow(Delta, i * epsilon);
    b.side_exp = static_cast<int>(std::floor(std::log2(b.anchor / (quad.dimension * beta))));
    b.first_level = 0;
    b.last_level = -1;
  }
  s.level_block.resize(top + 1);
  for (int i = 0; i <= top; ++i) {
    double t = s.levels[i];
    int blk = 0;
    while (blk + 1 < nblocks && s.blocks[blk + 1].anchor <= t * (1.0 + 1e-12)) ++blk;
    s.level_block[i] = blk;
    if (s.blocks[blk].last_level < 0) s.blocks[blk].first_level = i;
    s.blocks[blk].last_level = i;
  }
  return s;
}

}  // namespace

OnePassResult run_onepass(const OnePassConfig& cfg, const PointMultiset& P) {
  cfg.validate();
  if (P.empty()) throw std::invalid_argument("onepass: empty input");
  OnePassResult res;
  auto pts = P.support();
  const int d = static_cast<int>(pts[0].dim());
  const double eps = cfg.epsilon;

  // Enforce the minimum-distance precondition by scaling the input.
  int64_t min_dist = 0;
  for (size_t i = 0; i < pts.size(); ++i)
    for (size_t k = i + 1; k < pts.size(); ++k)
      if (int64_t dd = l1_distance(pts[i], pts[k]); dd > 0 && (min_dist == 0 || dd < min_dist))
        min_dist = dd;
  double target = cfg.min_distance_target > 0 ? cfg.min_distance_target
                                              : std::ceil(1.0 / (eps * eps * eps));
  int64_t scale = 1;
  if (min_dist > 0)
    while (static_cast<double>(scale) * static_cast<double>(min_dist) < target) scale <<= 1;
  res.scale_applied = scale;

  PointMultiset scaled;
  int64_t lambda = 1;
  for (const auto& [p, c] : P.counts()) {
    Point q = p;
    for (auto& cd : q.coords) {
      cd *= scale;
      lambda = std::max(lambda, cd);
    }
    scaled.add(q, c);
  }

  // Diameter bound.
  int64_t delta_bound;
  if (cfg.sketch_diameter) {
    auto diam = diameter_sketch(scaled, eps, prf64(cfg.seed, role_tag("onepass-diam"), 0));
    delta_bound = 2;
    while (delta_bound < diam.delta) delta_bound <<= 1;
    for (const auto& w : diam.warnings) res.warnings.push_back(w);
  } else {
    int64_t diam = exact_diameter(scaled);
    delta_bound = 2;
    while (delta_bound < diam) delta_bound <<= 1;
  }
  res.delta_bound = delta_bound;
  const int tau = cfg.tau_for(delta_bound);
  res.survive_prob = cfg.survive_both_prob(d);

  QuadtreeConfig quad;
  quad.dimension = d;
  quad.lambda = lambda;
  quad.delta_bound = delta_bound;
  quad.epsilon = eps;
  quad.alpha = 1;
  quad.seed = prf64(cfg.seed, role_tag("onepass-quad"), 0);
  const double beta = cfg.beta > 0 ? cfg.beta : 10.0 * d;

  LevelStructure structure = onepass_structure(quad, eps, beta);
  ShiftedGrids grids(quad, structure);
  std::vector<DiscretizedLevel> per_block = all_vertex_sets(quad, grids, structure, scaled);

  std::vector<std::unique_ptr<BlockGraph>> graphs(per_block.size());
  std::vector<Centering> centerings(per_block.size());
  std::vector<double> hat_v_block(per_block.size(), 0);
  for (size_t b = 0; b < per_block.size(); ++b) {
    graphs[b] = std::make_unique<BlockGraph>(per_block[b]);
    centerings[b] = center_for(graphs[b]->vertices());
    if (cfg.sketch_mode) {
      // streaming support estimate for V_T
      L0Estimator est(prf64(cfg.seed, kRoleCount, b), 0.1);
      const int64_t max_fine = ((lambda + delta_bound / 2 + 2) << (-grids.unit_exp()));
      VertexCodec codec(d, max_fine);
      for (const auto& [p, c] : scaled.counts())
        est.update(codec.encode(grids.snap(static_cast<int>(b), p)), c);
      double e = est.estimate();
      hat_v_block[b] = e < 1.5 ? 1.0 : e;
    } else {
      hat_v_block[b] = static_cast<double>(graphs[b]->size());
    }
  }

  for (int li = 0; li < static_cast<int>(structure.levels.size()); ++li) {
    const int b = structure.block_of_level(li);
    const double t = structure.levels[li];
    OnePassLevel level(cfg, *graphs[b], t, tau, delta_bound, centerings[b]);

    OnePassLevelReport rep;
    rep.t = t;
    rep.vertex_count = graphs[b]->size();
    rep.hat_v = hat_v_block[b];
    rep.class_histogram.assign(4 + tau + 1, 0);
    for (int v = 0; v < graphs[b]->size(); ++v) {
      PointClass pc = level.classify(v);
      if (pc.very_dead) ++rep.class_histogram[0];
      if (pc.dead) ++rep.class_histogram[1];
      if (pc.nearly_complete) ++rep.class_histogram[2];
      if (pc.complete) ++rep.class_histogram[3];
      if (pc.type >= 0) ++rep.class_histogram[4 + pc.type];
    }

    double zsum = 0;
    for (int s = 0; s < cfg.samples_per_level; ++s) {
      LevelSample smp = level.trial(prf64(cfg.seed, kRoleTrial, li, s), &rep.stats);
      if (!smp.fail) {
        zsum += smp.z;
        ++rep.samples_ok;
      }
    }
    rep.mean_z = rep.samples_ok > 0 ? zsum / rep.samples_ok : 0.0;
    if (rep.samples_ok == 0)
      res.warnings.push_back("level " + std::to_string(li) + ": all trials failed");
    res.levels.push_back(std::move(rep));
  }

  double r_scaled = estimator_R(eps, res.levels);
  res.estimate = r_scaled / static_cast<double>(scale);
  if (r_scaled == 0) res.warnings.push_back("estimator R is zero (degenerate input)");
  return res;
}

}  // namespace emst
