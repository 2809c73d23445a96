#include "emst/oracle.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "emst/prng.hpp"

namespace emst {

MstResult mst_oracle(const PointMultiset& P) {
  if (P.empty()) throw std::invalid_argument("mst_oracle: empty point set");
  auto pts = P.support();
  const int n = static_cast<int>(pts.size());
  MstResult res;
  if (n == 1) return res;

  struct E {
    int64_t w;
    int i, j;
  };
  std::vector<E> edges;
  edges.reserve(static_cast<size_t>(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) edges.push_back({l1_distance(pts[i], pts[j]), i, j});
  // pts is sorted, so (w, i, j) ordering is the lexicographic edge order.
  std::sort(edges.begin(), edges.end(),
            [](const E& a, const E& b) { return std::tie(a.w, a.i, a.j) < std::tie(b.w, b.i, b.j); });

  std::vector<int> parent(n);
  for (int i = 0; i < n; ++i) parent[i] = i;
  std::function<int(int)> find = [&](int v) {
    while (parent[v] != v) {
      parent[v] = parent[parent[v]];
      v = parent[v];
    }
    return v;
  };
  for (const auto& e : edges) {
    int a = find(e.i), b = find(e.j);
    if (a == b) continue;
    parent[a] = b;
    res.cost += e.w;
    res.edges.push_back({pts[e.i], pts[e.j], e.w});
    if (static_cast<int>(res.edges.size()) == n - 1) break;
  }
  return res;
}

int64_t mst_prim_cost(const PointMultiset& P) {
  if (P.empty()) throw std::invalid_argument("mst_prim_cost: empty point set");
  auto pts = P.support();
  const int n = static_cast<int>(pts.size());
  if (n == 1) return 0;
  std::vector<int64_t> best(n, std::numeric_limits<int64_t>::max());
  std::vector<char> used(n, 0);
  best[0] = 0;
  int64_t total = 0;
  for (int it = 0; it < n; ++it) {
    int u = -1;
    for (int i = 0; i < n; ++i)
      if (!used[i] && (u < 0 || best[i] < best[u])) u = i;
    used[u] = 1;
    total += best[u];
    for (int i = 0; i < n; ++i)
      if (!used[i]) best[i] = std::min(best[i], l1_distance(pts[u], pts[i]));
  }
  return total;
}

int64_t exact_diameter(const PointMultiset& P) {
  auto pts = P.support();
  int64_t d = 0;
  for (size_t i = 0; i < pts.size(); ++i)
    for (size_t j = i + 1; j < pts.size(); ++j) d = std::max(d, l1_distance(pts[i], pts[j]));
  return d;
}

InstanceSpec InstanceSpec::parse(const std::string& text) {
  InstanceSpec spec;
  auto colon = text.find(':');
  spec.generator = text.substr(0, colon);
  if (colon != std::string::npos) {
    std::stringstream ss(text.substr(colon + 1));
    std::string kv;
    while (std::getline(ss, kv, ',')) {
      auto eq = kv.find('=');
      if (eq == std::string::npos) throw std::invalid_argument("bad generator spec item: " + kv);
      std::string key = kv.substr(0, eq);
      int64_t val = std::stoll(kv.substr(eq + 1));
      if (key == "n")
        spec.n = val;
      else if (key == "d")
        spec.dimension = static_cast<int>(val);
      else if (key == "lambda")
        spec.lambda = val;
      else if (key == "clusters")
        spec.clusters = val;
      else if (key == "spread")
        spec.spread = val;
      else if (key == "side")
        spec.side = val;
      else if (key == "step")
        spec.step = val;
      else if (key == "base")
        spec.base = val;
      else
        throw std::invalid_argument("unknown generator key: " + key);
    }
  }
  if (spec.generator != "uniform" && spec.generator != "clustered" && spec.generator != "grid" &&
      spec.generator != "cantor")
    throw std::invalid_argument("unknown generator: " + spec.generator);
  return spec;
}

std::string InstanceSpec::version() const { return generator + "/v1"; }

PointMultiset generate_cantor(int64_t n, int64_t base) {
  if (n < 2 || (n & (n - 1)) != 0) throw std::invalid_argument("cantor: n must be a power of 2");
  if (base < 2) throw std::invalid_argument("cantor: base >= 2");
  PointMultiset ms;
  int64_t x = 1;
  ms.add(Point{{x}});
  for (int64_t i = 1; i < n; ++i) {
    int64_t v = i, exp = 0;
    while ((v & 1) == 0) {
      v >>= 1;
      ++exp;
    }
    int64_t gap = 1;
    for (int64_t e = 0; e < exp; ++e) gap *= base;
    x += gap;
    ms.add(Point{{x}});
  }
  return ms;
}

PointMultiset generate_instance(const InstanceSpec& spec, uint64_t seed) {
  Rng rng(seed, role_tag("instance-gen"));
  PointMultiset ms;
  if (spec.generator == "uniform") {
    for (int64_t k = 0; k < spec.n; ++k) {
      Point p;
      p.coords.resize(spec.dimension);
      for (int i = 0; i < spec.dimension; ++i) p.coords[i] = rng.next_in(1, spec.lambda);
      ms.add(p);
    }
  } else if (spec.generator == "clustered") {
    std::vector<Point> centers;
    for (int64_t c = 0; c < spec.clusters; ++c) {
      Point p;
      p.coords.resize(spec.dimension);
      for (int i = 0; i < spec.dimension; ++i) p.coords[i] = rng.next_in(1, spec.lambda);
      centers.push_back(p);
    }
    for (int64_t k = 0; k < spec.n; ++k) {
      const Point& c = centers[rng.next_below(centers.size())];
      Point p;
      p.coords.resize(spec.dimension);
      for (int i = 0; i < spec.dimension; ++i) {
        int64_t v = c.coords[i] + rng.next_in(-spec.spread, spec.spread);
        p.coords[i] = std::clamp<int64_t>(v, 1, spec.lambda);
      }
      ms.add(p);
    }
  } else if (spec.generator == "grid") {
    std::vector<int64_t> idx(spec.dimension, 0);
    while (true) {
      Point p;
      p.coords.resize(spec.dimension);
      for (int i = 0; i < spec.dimension; ++i) p.coords[i] = 1 + idx[i] * spec.step;
      ms.add(p);
      int i = 0;
      for (; i < spec.dimension; ++i) {
        if (++idx[i] < spec.side) break;
        idx[i] = 0;
      }
      if (i == spec.dimension) break;
    }
  } else if (spec.generator == "cantor") {
    ms = generate_cantor(spec.n, spec.base);
  } else {
    throw std::invalid_argument("unknown generator: " + spec.generator);
  }
  return ms;
}

PointStream to_insert_stream(const PointMultiset& P, int64_t lambda, int dimension) {
  PointStream s;
  s.lambda = lambda;
  s.dimension = dimension;
  for (const auto& [p, c] : P.counts())
    for (int64_t k = 0; k < c; ++k) s.updates.push_back({+1, p});
  return s;
}

}  // namespace emst
