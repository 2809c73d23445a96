#include "emst/components.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace emst {

EstimatorParams EstimatorParams::from(const QuadtreeConfig& cfg, const LevelStructure& s,
                                      double size_threshold) {
  EstimatorParams p;
  p.size_threshold = size_threshold;
  p.bfs_rounds = cfg.alpha;
  p.log_level_count = std::max(1, static_cast<int>(std::ceil(std::log2(
                                       std::max(2, s.level_count_exponent)))));
  return p;
}

BlockGraph::BlockGraph(const DiscretizedLevel& level) : level_(&level) {
  verts_.reserve(level.vertices.distinct_size());
  mult_.reserve(level.vertices.distinct_size());
  for (const auto& [p, c] : level.vertices.counts()) {
    verts_.push_back(p);
    mult_.push_back(c);
  }
  const int n = static_cast<int>(verts_.size());
  sorted_.resize(n);
  for (int i = 0; i < n; ++i) {
    auto& row = sorted_[i];
    row.reserve(n);
    for (int j = 0; j < n; ++j) row.emplace_back(l1_distance(verts_[i], verts_[j]), j);
    std::sort(row.begin(), row.end());
  }
}

std::optional<int> BlockGraph::index_of(const Point& p) const {
  auto it = std::lower_bound(verts_.begin(), verts_.end(), p);
  if (it == verts_.end() || !(*it == p)) return std::nullopt;
  return static_cast<int>(it - verts_.begin());
}

int64_t BlockGraph::dist_fine(int i, int j) const { return l1_distance(verts_[i], verts_[j]); }

int64_t BlockGraph::min_pairwise_distance() const {
  int64_t best = 0;
  for (size_t i = 0; i < sorted_.size(); ++i) {
    if (sorted_[i].size() < 2) continue;
    int64_t nn = sorted_[i][1].first;
    if (best == 0 || nn < best) best = nn;
  }
  return best;
}

std::vector<int> BlockGraph::ball(int i, double r_fine) const {
  std::vector<int> out;
  for (const auto& [d, j] : sorted_[i]) {
    if (static_cast<double>(d) > r_fine) break;
    out.push_back(j);
  }
  std::sort(out.begin(), out.end());
  return out;
}

int BlockGraph::ball_count(int i, double r_fine) const {
  const auto& row = sorted_[i];
  size_t lo = 0, hi = row.size();
  while (lo < hi) {
    size_t mid = (lo + hi) / 2;
    if (static_cast<double>(row[mid].first) <= r_fine)
      lo = mid + 1;
    else
      hi = mid;
  }
  return static_cast<int>(lo);
}

ThresholdGraphView::ThresholdGraphView(const BlockGraph& g, double t)
    : graph(&g), t_input(t), t_fine(g.level().threshold_fine(t)) {}

bool ThresholdGraphView::adjacent(int i, int j) const {
  return i != j && static_cast<double>(graph->dist_fine(i, j)) <= t_fine;
}

std::vector<int> ThresholdGraphView::neighbors(int i) const {
  auto out = graph->ball(i, t_fine);
  out.erase(std::remove(out.begin(), out.end(), i), out.end());
  return out;
}

ComponentPartition connected_components(const ThresholdGraphView& g) {
  const int n = g.graph->size();
  std::vector<int> parent(n), rank(n, 0);
  for (int i = 0; i < n; ++i) parent[i] = i;
  std::function<int(int)> find = [&](int v) {
    while (parent[v] != v) {
      parent[v] = parent[parent[v]];
      v = parent[v];
    }
    return v;
  };
  for (int i = 0; i < n; ++i) {
    for (int j : g.neighbors(i)) {
      if (j <= i) continue;
      int a = find(i), b = find(j);
      if (a == b) continue;
      if (rank[a] < rank[b]) std::swap(a, b);
      parent[b] = a;
      if (rank[a] == rank[b]) ++rank[a];
    }
  }
  ComponentPartition part;
  part.comp_id.assign(n, -1);
  std::vector<int> remap(n, -1);
  for (int i = 0; i < n; ++i) {
    int r = find(i);
    if (remap[r] < 0) {
      remap[r] = part.count++;
      part.comp_size.push_back(0);
    }
    part.comp_id[i] = remap[r];
    ++part.comp_size[remap[r]];
  }
  return part;
}

double x_value(const ComponentPartition& part, int v) { return 1.0 / part.size_of_vertex(v); }

BfsResult bfs_limited(const ThresholdGraphView& g, int v, int rounds, double cap) {
  BfsResult res;
  const int n = g.graph->size();
  std::vector<char> seen(n, 0);
  std::vector<int> frontier{v};
  seen[v] = 1;
  res.explored.push_back(v);
  res.size_at_round.push_back(1);
  if (1.0 >= cap) {
    res.overflow = true;
    return res;
  }
  for (int r = 0; r < rounds && !frontier.empty(); ++r) {
    std::vector<int> next;
    for (int u : frontier) {
      for (int w : g.neighbors(u)) {
        if (!seen[w]) {
          seen[w] = 1;
          next.push_back(w);
        }
      }
    }
    std::sort(next.begin(), next.end());
    for (int w : next) res.explored.push_back(w);
    res.size_at_round.push_back(static_cast<int>(res.explored.size()));
    if (static_cast<double>(res.explored.size()) >= cap) {
      res.overflow = true;
      return res;
    }
    frontier = std::move(next);
  }
  return res;
}

namespace {

// Component of v in the subgraph induced on `subset` (ascending indices).
int induced_component_size(const ThresholdGraphView& g, int v, const std::vector<int>& subset) {
  std::vector<int> pos(subset.size());
  std::vector<char> inset_seen(subset.size(), 0);
  auto locate = [&](int w) {
    auto it = std::lower_bound(subset.begin(), subset.end(), w);
    if (it == subset.end() || *it != w) return -1;
    return static_cast<int>(it - subset.begin());
  };
  int start = locate(v);
  if (start < 0) return 1;
  std::vector<int> stack{start};
  inset_seen[start] = 1;
  int count = 0;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    ++count;
    for (size_t k = 0; k < subset.size(); ++k) {
      if (!inset_seen[k] && g.adjacent(subset[u], subset[k])) {
        inset_seen[k] = 1;
        stack.push_back(static_cast<int>(k));
      }
    }
  }
  return count;
}

}  // namespace

double y_value(const ThresholdGraphView& g, int v, const EstimatorParams& params) {
  const double theta = params.size_threshold;
  if (g.graph->ball_count(v, g.t_fine) >= theta) return 0.0;  // n_0 >= threshold
  int jstar = 0;
  for (int j = 1; j <= params.log_level_count; ++j) {
    double r = std::ldexp(g.t_fine, j);  // 2^j * t
    if (g.graph->ball_count(v, r) < theta)
      jstar = j;
    else
      break;
  }
  auto subset = g.graph->ball(v, std::ldexp(g.t_fine, jstar));
  return 1.0 / induced_component_size(g, v, subset);
}

double z_value(const ThresholdGraphView& g, int v, const EstimatorParams& params) {
  auto res = bfs_limited(g, v, params.bfs_rounds, params.size_threshold);
  if (res.overflow) return 0.0;
  return 1.0 / static_cast<double>(res.explored.size());
}

LevelSweep::LevelSweep(const BlockGraph& g) : g_(&g) {
  const int n = g.size();
  parent_.resize(n);
  size_.assign(n, 1);
  for (int i = 0; i < n; ++i) parent_[i] = i;
  count_ = n;
  edges_.reserve(static_cast<size_t>(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) edges_.push_back({g.dist_fine(i, j), {i, j}});
  std::sort(edges_.begin(), edges_.end());
}

int LevelSweep::find(int v) const {
  while (parent_[v] != v) {
    parent_[v] = parent_[parent_[v]];
    v = parent_[v];
  }
  return v;
}

void LevelSweep::advance_to(double t_fine) {
  while (next_edge_ < edges_.size() && static_cast<double>(edges_[next_edge_].first) <= t_fine) {
    auto [i, j] = edges_[next_edge_].second;
    ++next_edge_;
    int a = find(i), b = find(j);
    if (a == b) continue;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    --count_;
    ++version_;
  }
}

int LevelSweep::comp_size_of(int v) const { return size_[find(v)]; }

}  // namespace emst
