#include "emst/multipass.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "emst/prng.hpp"
#include "emst/sketch/ksparse.hpp"
#include "emst/sketch/l0_sampler.hpp"
#include "emst/vertex_codec.hpp"

namespace emst {

FileStreamSource::FileStreamSource(std::string path) : path_(std::move(path)) {
  auto s = read_stream_file(path_);
  lambda_ = s.lambda;
  dimension_ = s.dimension;
}

void FileStreamSource::replay(const std::function<void(const StreamUpdate&)>& fn) {
  ++replays_;
  auto s = read_stream_file(path_);  // each pass re-reads from disk
  for (const auto& u : s.updates) fn(u);
}

namespace {

constexpr uint64_t kRoleSampler = role_tag("alpha-sampler");
constexpr uint64_t kRoleCount = role_tag("alpha-count");
constexpr uint64_t kRoleBall = role_tag("alpha-ball");
constexpr uint64_t kRoleBfs = role_tag("alpha-bfs");

struct TrialState {
  int level_index = -1;
  int slot = 0;
  int block = 0;
  double t_fine = 0;

  bool sampler_failed = false;
  bool discarded = false;
  bool fail_seen = false;
  Point sample_pt;

  double y = 0;
  bool y_done = false;

  // BFS side
  double z = 0;
  bool z_final = false;
  std::vector<Point> explored_pts;
  std::vector<SketchIndex> explored_ix;  // sorted

  std::vector<KSparseSketch> ball_sketches;
  std::unique_ptr<KSparseSketch> bfs_sketch;

  bool in_explored(SketchIndex ix) const {
    return std::binary_search(explored_ix.begin(), explored_ix.end(), ix);
  }
  void add_explored(SketchIndex ix, const Point& p) {
    explored_ix.insert(std::upper_bound(explored_ix.begin(), explored_ix.end(), ix), ix);
    explored_pts.push_back(p);
  }
};

double dist_fine(const Point& a, const Point& b) {
  return static_cast<double>(l1_distance(a, b));
}

uint64_t trial_tag(const TrialState& tr) {
  return (static_cast<uint64_t>(tr.level_index) << 20) | static_cast<uint64_t>(tr.slot);
}

// Decodes one BFS expansion. FAIL certifies |BFS| >= threshold (z = 0);
// an empty decode means the frontier stabilized. Recovered vertices are
// validated against the pre-round explored set before being added.
void expand_bfs(TrialState& tr, const VertexCodec& codec, double theta) {
  auto dec = tr.bfs_sketch->decode();
  tr.bfs_sketch.reset();
  if (!dec) {
    tr.fail_seen = true;
    tr.z = 0;
    tr.z_final = true;
    return;
  }
  if (dec->empty()) {
    tr.z = 1.0 / static_cast<double>(tr.explored_ix.size());
    tr.z_final = true;
    return;
  }
  const size_t pre_n = tr.explored_pts.size();
  for (const auto& [ix, c] : *dec) {
    Point q = codec.decode(ix);
    bool near = false;
    for (size_t i = 0; i < pre_n && !near; ++i)
      if (dist_fine(q, tr.explored_pts[i]) <= tr.t_fine) near = true;
    if (!near || tr.in_explored(ix)) {
      tr.discarded = true;
      return;
    }
    tr.add_explored(ix, q);
  }
  if (static_cast<double>(tr.explored_ix.size()) >= theta) {
    tr.z = 0;
    tr.z_final = true;
  }
}

// Component of `center` in the threshold graph induced on `pts`.
int induced_cc_size(const std::vector<Point>& pts, const Point& center, double t_fine) {
  const int n = static_cast<int>(pts.size());
  int start = -1;
  for (int i = 0; i < n; ++i)
    if (pts[i] == center) {
      start = i;
      break;
    }
  if (start < 0) return 1;
  std::vector<char> seen(n, 0);
  std::vector<int> stack{start};
  seen[start] = 1;
  int count = 0;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    ++count;
    for (int v = 0; v < n; ++v)
      if (!seen[v] && dist_fine(pts[u], pts[v]) <= t_fine) {
        seen[v] = 1;
        stack.push_back(v);
      }
  }
  return count;
}

}  // namespace

AlphaPassResult run_alpha_pass(const AlphaPassConfig& cfg, StreamSource& source) {
  cfg.quad.validate();
  const int d = source.dimension();
  if (d != cfg.quad.dimension) throw std::invalid_argument("alpha-pass: dimension mismatch");
  const int alpha = cfg.quad.alpha;
  const double theta = cfg.size_threshold;
  const int ksparse_budget = std::max(1, static_cast<int>(std::ceil(theta)));

  LevelStructure structure = build_levels(cfg.quad);
  ShiftedGrids grids(cfg.quad, structure);
  const int n_levels = static_cast<int>(structure.levels.size());
  const int n_blocks = static_cast<int>(structure.blocks.size());
  const double delta = cfg.quad.resolved_delta();

  const int64_t max_fine =
      ((cfg.quad.lambda + cfg.quad.delta_bound / 2 + 2) << (-grids.unit_exp()));
  VertexCodec codec(d, max_fine);
  VertexCodec raw_codec(d, cfg.quad.lambda + 1);

  AlphaPassResult res;
  res.rounds_per_trial = alpha + 1;
  res.hat_n.assign(n_levels, 0);
  res.level_mean.assign(n_levels, 0);
  res.warnings = structure.warnings;

  EstimatorParams params;
  params.size_threshold = theta;
  params.bfs_rounds = alpha;
  params.log_level_count = std::max(
      1, static_cast<int>(std::ceil(std::log2(std::max(2, structure.level_count_exponent)))));
  const int n_ball_sketches = params.log_level_count + 1;

  // n_hat_0 over the raw (unsnapped) point vector.
  L0Estimator n0_est(prf64(cfg.quad.seed, kRoleCount, 0xffff), cfg.eps0);
  bool n0_done = false;

  std::vector<double> block_hat_n(n_blocks, -1.0);

  for (int chunk_begin = 0; chunk_begin < n_levels; chunk_begin += cfg.level_chunk) {
    const int chunk_end = std::min(n_levels, chunk_begin + cfg.level_chunk);
    std::vector<int> chunk_blocks;
    for (int li = chunk_begin; li < chunk_end; ++li) {
      int b = structure.block_of_level(li);
      if (chunk_blocks.empty() || chunk_blocks.back() != b) chunk_blocks.push_back(b);
    }

    // ---- Round 1: per-trial l0 samplers, per-block support estimates ----
    std::vector<std::vector<L0Sampler>> samplers(chunk_end - chunk_begin);
    for (int li = chunk_begin; li < chunk_end; ++li) {
      auto& row = samplers[li - chunk_begin];
      for (int s = 0; s < cfg.samples_per_level; ++s)
        row.emplace_back(prf64(cfg.quad.seed, kRoleSampler, li, s), 24, 6);
    }
    std::vector<std::unique_ptr<L0Estimator>> block_est(n_blocks);
    for (int b : chunk_blocks)
      if (block_hat_n[b] < 0 && !cfg.use_exact_counts)
        block_est[b] = std::make_unique<L0Estimator>(prf64(cfg.quad.seed, kRoleCount, b), cfg.eps0);
    std::vector<PointMultiset> exact_support(n_blocks);

    source.replay([&](const StreamUpdate& u) {
      if (!n0_done) n0_est.update(raw_codec.encode(u.point), u.sign);
      for (int b : chunk_blocks) {
        Point v = grids.snap(b, u.point);
        SketchIndex ix = codec.encode(v);
        if (block_est[b]) block_est[b]->update(ix, u.sign);
        if (cfg.use_exact_counts && block_hat_n[b] < 0) exact_support[b].add(v, u.sign);
        for (int li = chunk_begin; li < chunk_end; ++li) {
          if (structure.block_of_level(li) != b) continue;
          for (auto& smp : samplers[li - chunk_begin]) smp.update(ix, u.sign);
        }
      }
    });
    n0_done = true;
    for (int b : chunk_blocks) {
      if (block_hat_n[b] >= 0) continue;
      if (cfg.use_exact_counts)
        block_hat_n[b] = static_cast<double>(exact_support[b].distinct_size());
      else
        block_hat_n[b] = block_est[b]->estimate();
    }

    // Decode round-1 samples into trial states.
    std::vector<TrialState> trials;
    for (int li = chunk_begin; li < chunk_end; ++li) {
      const int b = structure.block_of_level(li);
      const double t_input = structure.levels[li];
      for (int s = 0; s < cfg.samples_per_level; ++s) {
        TrialState tr;
        tr.level_index = li;
        tr.slot = s;
        tr.block = b;
        tr.t_fine = std::ldexp(t_input, -grids.unit_exp());
        auto got = samplers[li - chunk_begin][s].sample();
        if (!got) {
          tr.sampler_failed = true;
        } else {
          tr.sample_pt = codec.decode(*got);
          tr.add_explored(*got, tr.sample_pt);
        }
        trials.push_back(std::move(tr));
      }
    }
    samplers.clear();

    // ---- Round 2: ball sketches for y, first BFS expansion for z ----
    for (auto& tr : trials) {
      if (tr.sampler_failed) continue;
      if (theta <= 1) {  // degenerate threshold: everything is dead
        tr.y = 0;
        tr.y_done = true;
        tr.z = 0;
        tr.z_final = true;
        continue;
      }
      for (int j = 0; j < n_ball_sketches; ++j)
        tr.ball_sketches.emplace_back(ksparse_budget,
                                      prf64(cfg.quad.seed, kRoleBall, trial_tag(tr), j));
      int k = ksparse_budget - 1 - 1;  // theta - |E0| - 1
      tr.bfs_sketch = std::make_unique<KSparseSketch>(
          std::max(1, k), prf64(cfg.quad.seed, kRoleBfs, trial_tag(tr), 0));
    }

    auto round2 = [&](const StreamUpdate& u) {
      for (int b : chunk_blocks) {
        Point v = grids.snap(b, u.point);
        SketchIndex ix = codec.encode(v);
        for (auto& tr : trials) {
          if (tr.block != b || tr.sampler_failed || tr.ball_sketches.empty()) continue;
          double dist = dist_fine(v, tr.sample_pt);
          // ball sketch j takes the update iff dist <= 2^j * t
          for (int j = 0; j < n_ball_sketches; ++j)
            if (dist <= std::ldexp(tr.t_fine, j)) tr.ball_sketches[j].update(ix, u.sign);
          // BFS round 1 neighborhood: within t of E0 = {p}, not explored
          if (dist <= tr.t_fine && !tr.in_explored(ix)) tr.bfs_sketch->update(ix, u.sign);
        }
      }
    };
    source.replay(round2);

    // Decode y and the first BFS expansion.
    for (auto& tr : trials) {
      if (tr.sampler_failed || tr.y_done) continue;
      // y: find the largest j with n_j < theta
      int jstar = -1;
      std::vector<Point> ball_pts;
      bool discarded = false;
      std::vector<std::optional<std::vector<std::pair<SketchIndex, int64_t>>>> decs;
      for (auto& sk : tr.ball_sketches) decs.push_back(sk.decode());
      for (int j = 0; j < n_ball_sketches; ++j) {
        if (!decs[j]) {
          tr.fail_seen = true;
          continue;
        }
        double nj = 0;
        for (auto& [ix, c] : *decs[j]) nj += 1;
        if (nj < theta && (jstar < 0 || j > jstar)) jstar = j;
      }
      if (!decs[0]) {
        tr.y = 0;  // n_0 > k >= theta - 1, so the unit ball is over threshold
        tr.y_done = true;
      } else if (static_cast<double>(decs[0]->size()) >= theta) {
        tr.y = 0;
        tr.y_done = true;
      } else if (jstar < 0) {
        tr.discarded = true;  // n_0 < theta but no decodable level: inconsistent
        continue;
      } else {
        double radius = std::ldexp(tr.t_fine, jstar);
        for (auto& [ix, c] : *decs[jstar]) {
          Point q = codec.decode(ix);
          if (dist_fine(q, tr.sample_pt) > radius + 1e-9) {
            discarded = true;  // recovered item outside its ball
            break;
          }
          ball_pts.push_back(q);
        }
        if (discarded) {
          tr.discarded = true;
          continue;
        }
        tr.y = 1.0 / induced_cc_size(ball_pts, tr.sample_pt, tr.t_fine);
        tr.y_done = true;
      }
      tr.ball_sketches.clear();

      if (!tr.discarded && tr.y_done && tr.y == 0.0) {
        tr.z = 0;  // min(y,z) is 0 either way; skip the remaining BFS passes
        tr.z_final = true;
      }
      if (!tr.discarded && !tr.z_final) expand_bfs(tr, codec, theta);  // BFS expansion 1
    }

    // ---- Rounds 3..alpha+1: BFS expansions 2..alpha ----
    for (int round = 2; round <= alpha; ++round) {
      bool any_active = false;
      for (auto& tr : trials) {
        if (tr.sampler_failed || tr.discarded || tr.z_final) continue;
        int k = ksparse_budget - static_cast<int>(tr.explored_ix.size()) - 1;
        tr.bfs_sketch = std::make_unique<KSparseSketch>(
            std::max(1, k), prf64(cfg.quad.seed, kRoleBfs, trial_tag(tr), round));
        any_active = true;
      }
      if (!any_active) break;
      source.replay([&](const StreamUpdate& u) {
        for (int b : chunk_blocks) {
          bool snapped = false;
          Point v;
          SketchIndex ix = 0;
          for (auto& tr : trials) {
            if (tr.block != b || tr.sampler_failed || tr.discarded || tr.z_final ||
                !tr.bfs_sketch)
              continue;
            if (!snapped) {
              v = grids.snap(b, u.point);
              ix = codec.encode(v);
              snapped = true;
            }
            if (tr.in_explored(ix)) continue;
            bool adjacent = false;
            for (const auto& e : tr.explored_pts)
              if (dist_fine(v, e) <= tr.t_fine) {
                adjacent = true;
                break;
              }
            if (adjacent) tr.bfs_sketch->update(ix, u.sign);
          }
        }
      });
      for (auto& tr : trials) {
        if (tr.sampler_failed || tr.discarded || tr.z_final || !tr.bfs_sketch) continue;
        expand_bfs(tr, codec, theta);
      }
    }
    for (auto& tr : trials) {
      if (tr.sampler_failed || tr.discarded) continue;
      if (!tr.z_final) {  // alpha rounds completed without overflow
        tr.z = 1.0 / static_cast<double>(tr.explored_ix.size());
        tr.z_final = true;
      }
    }

    // Accumulate per-level means.
    for (int li = chunk_begin; li < chunk_end; ++li) {
      double sum = 0;
      int n_ok = 0;
      for (auto& tr : trials) {
        if (tr.level_index != li) continue;
        PassSampleRecord rec;
        rec.level_index = li;
        rec.t = structure.levels[li];
        rec.sampler_failed = tr.sampler_failed;
        rec.discarded = tr.discarded;
        rec.sketch_fail_seen = tr.fail_seen;
        if (!tr.sampler_failed && !tr.discarded) {
          rec.vertex = tr.sample_pt;
          rec.y = tr.y;
          rec.z = tr.z;
          rec.min_yz = std::min(tr.y, tr.z);
          sum += rec.min_yz;
          ++n_ok;
        }
        res.samples.push_back(std::move(rec));
      }
      if (n_ok == 0) {
        res.warnings.push_back("level " + std::to_string(li) + ": no surviving samples");
        res.level_mean[li] = 0;
      } else {
        res.level_mean[li] = sum / n_ok;
      }
      double hat = block_hat_n[structure.block_of_level(li)];
      if (hat < 1.5) hat = std::max(1.0, std::round(hat));  // snap to 1 for singleton levels
      res.hat_n[li] = hat;
    }
  }

  res.hat_n0 = cfg.use_exact_counts ? -1 : n0_est.estimate();
  if (cfg.use_exact_counts) {
    PointMultiset all;
    source.replay([&](const StreamUpdate& u) { all.add(u.point, u.sign); });
    res.hat_n0 = static_cast<double>(all.distinct_size());
  }

  double acc = 0;
  for (int li = 0; li < n_levels; ++li)
    acc += structure.levels[li] * res.hat_n[li] * res.level_mean[li];
  res.estimate = res.hat_n0 -
                 std::pow(1.0 + delta, structure.level_count_exponent + 1) + delta * acc;
  res.replays_total = source.replays();
  return res;
}

}  // namespace emst
