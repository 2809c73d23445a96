#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "emst/components.hpp"
#include "emst/estimators.hpp"
#include "emst/oracle.hpp"
#include "emst/prng.hpp"

using namespace emst;

namespace {

// A level whose vertices are the given integer points verbatim.
DiscretizedLevel raw_level(const std::vector<Point>& pts) {
  DiscretizedLevel lvl;
  lvl.anchor = 1;
  lvl.unit_exp = 0;
  lvl.side_fine = 1;
  for (const auto& p : pts) lvl.vertices.add(p);
  return lvl;
}

// Independent component labeling by repeated BFS, as a second route.
std::vector<int> bfs_labels(const ThresholdGraphView& g) {
  const int n = g.graph->size();
  std::vector<int> label(n, -1);
  int next = 0;
  for (int s = 0; s < n; ++s) {
    if (label[s] >= 0) continue;
    std::vector<int> queue{s};
    label[s] = next;
    for (size_t qi = 0; qi < queue.size(); ++qi) {
      for (int u = 0; u < n; ++u)
        if (label[u] < 0 && g.adjacent(queue[qi], u)) {
          label[u] = next;
          queue.push_back(u);
        }
    }
    ++next;
  }
  return label;
}

std::vector<Point> random_points(uint64_t seed, int n, int d, int64_t lambda) {
  Rng rng(seed, role_tag("test-comp"));
  std::set<Point> out;
  while (static_cast<int>(out.size()) < n) {
    Point p;
    for (int j = 0; j < d; ++j) p.coords.push_back(rng.next_in(1, lambda));
    out.insert(p);
  }
  return {out.begin(), out.end()};
}

}  // namespace

TEST_CASE("connected components on the 1-D fixture {0,1,3}") {
  auto lvl = raw_level({Point{{0}}, Point{{1}}, Point{{3}}});
  BlockGraph g(lvl);
  ThresholdGraphView view(g, 1.0);
  auto part = connected_components(view);
  CHECK(part.count == 2);
  CHECK(part.comp_id[0] == part.comp_id[1]);
  CHECK(part.comp_id[0] != part.comp_id[2]);

  ThresholdGraphView all(g, 3.0);  // t >= diameter
  CHECK(connected_components(all).count == 1);
}

TEST_CASE("components agree with an independent BFS labeling") {
  for (uint64_t seed = 1; seed <= 25; ++seed) {
    auto pts = random_points(seed, 24, 2, 24);
    auto lvl = raw_level(pts);
    BlockGraph g(lvl);
    for (double t : {1.0, 2.0, 4.0, 8.0}) {
      ThresholdGraphView view(g, t);
      auto part = connected_components(view);
      auto labels = bfs_labels(view);
      CHECK(part.count == 1 + *std::max_element(labels.begin(), labels.end()));
      for (int i = 0; i < g.size(); ++i)
        for (int j = 0; j < g.size(); ++j)
          CHECK((part.comp_id[i] == part.comp_id[j]) == (labels[i] == labels[j]));
    }
  }
}

TEST_CASE("x values: isolated vertex, component sizes, sum identity") {
  auto lvl = raw_level({Point{{0}}, Point{{1}}, Point{{2}}, Point{{10}}});
  BlockGraph g(lvl);
  ThresholdGraphView view(g, 1.0);
  auto part = connected_components(view);
  CHECK(x_value(part, 3) == doctest::Approx(1.0));
  CHECK(x_value(part, 0) == doctest::Approx(1.0 / 3));

  for (uint64_t seed = 1; seed <= 20; ++seed) {
    auto pts = random_points(seed, 30, 2, 20);
    auto l2 = raw_level(pts);
    BlockGraph g2(l2);
    for (double t : {1.0, 3.0, 9.0}) {
      ThresholdGraphView v2(g2, t);
      auto p2 = connected_components(v2);
      double sum = 0;
      for (int i = 0; i < g2.size(); ++i) sum += x_value(p2, i);
      CHECK(sum == doctest::Approx(p2.count));
    }
  }
}

TEST_CASE("ball queries match a linear scan") {
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    auto pts = random_points(seed, 20, 3, 12);
    auto lvl = raw_level(pts);
    BlockGraph g(lvl);
    for (int v = 0; v < g.size(); ++v) {
      CHECK(g.ball(v, 0.0) == std::vector<int>{v});
      auto all = g.ball(v, 1e9);
      CHECK(static_cast<int>(all.size()) == g.size());
      for (double r : {1.0, 4.0, 9.0}) {
        auto got = g.ball(v, r);
        std::vector<int> expect;
        for (int u = 0; u < g.size(); ++u)
          if (static_cast<double>(l1_distance(pts[v], pts[u])) <= r) expect.push_back(u);
        CHECK(got == expect);
        CHECK(g.ball_count(v, r) == static_cast<int>(expect.size()));
      }
    }
  }
}

TEST_CASE("bfs_limited: zero rounds, path graph, overflow vs uncapped oracle") {
  // path 0-1-2-3-4 with unit steps
  auto lvl = raw_level({Point{{0}}, Point{{1}}, Point{{2}}, Point{{3}}, Point{{4}}});
  BlockGraph g(lvl);
  ThresholdGraphView view(g, 1.0);
  auto r0 = bfs_limited(view, 2, 0, 1e9);
  CHECK(r0.explored == std::vector<int>{2});
  auto r2 = bfs_limited(view, 0, 2, 1e9);
  CHECK(r2.explored == std::vector<int>{0, 1, 2});  // 2-hop neighborhood of the end

  for (uint64_t seed = 1; seed <= 15; ++seed) {
    auto pts = random_points(seed, 18, 2, 10);
    auto l2 = raw_level(pts);
    BlockGraph g2(l2);
    ThresholdGraphView v2(g2, 2.0);
    for (int v = 0; v < g2.size(); ++v) {
      auto uncapped = bfs_limited(v2, v, 3, 1e9);
      for (double cap : {2.0, 4.0, 8.0}) {
        auto capped = bfs_limited(v2, v, 3, cap);
        CHECK(capped.overflow == (static_cast<double>(uncapped.explored.size()) >= cap));
      }
    }
  }
}

TEST_CASE("y values: threshold gate, isolated point, y >= x and z >= x when alive") {
  EstimatorParams params;
  params.size_threshold = 3;
  params.bfs_rounds = 2;
  params.log_level_count = 6;

  auto lvl = raw_level({Point{{0}}, Point{{1}}, Point{{2}}});
  BlockGraph g(lvl);
  ThresholdGraphView view(g, 1.0);
  CHECK(y_value(view, 1, params) == doctest::Approx(0.0));  // n0 = 3 >= 3

  auto iso = raw_level({Point{{0}}, Point{{100}}});
  BlockGraph g2(iso);
  ThresholdGraphView v2(g2, 1.0);
  EstimatorParams loose;
  loose.size_threshold = 64;
  loose.log_level_count = 3;
  CHECK(y_value(v2, 0, loose) == doctest::Approx(1.0));

  for (uint64_t seed = 1; seed <= 20; ++seed) {
    auto pts = random_points(seed, 26, 2, 14);
    auto l3 = raw_level(pts);
    BlockGraph g3(l3);
    ThresholdGraphView v3(g3, 2.0);
    auto part = connected_components(v3);
    EstimatorParams p3;
    p3.size_threshold = 8;
    p3.log_level_count = 5;
    p3.bfs_rounds = 3;
    for (int v = 0; v < g3.size(); ++v) {
      double y = y_value(v3, v, p3);
      if (y > 0) CHECK(y >= x_value(part, v) - 1e-12);
      double z = z_value(v3, v, p3);
      if (z > 0) CHECK(z >= x_value(part, v) - 1e-12);
    }
  }
}

TEST_CASE("z values: overflow and isolated vertex") {
  auto lvl = raw_level({Point{{0}}, Point{{1}}, Point{{2}}, Point{{3}}});
  BlockGraph g(lvl);
  ThresholdGraphView view(g, 1.0);
  EstimatorParams tight;
  tight.size_threshold = 2;
  tight.bfs_rounds = 3;
  CHECK(z_value(view, 0, tight) == doctest::Approx(0.0));

  auto iso = raw_level({Point{{0}}, Point{{50}}});
  BlockGraph g2(iso);
  ThresholdGraphView v2(g2, 1.0);
  EstimatorParams loose;
  loose.size_threshold = 64;
  loose.bfs_rounds = 2;
  CHECK(z_value(v2, 0, loose) == doctest::Approx(1.0));
}

TEST_CASE("cs sandwich: worked 1-D example and closed-form two-point case") {
  PointMultiset P;
  P.add(Point{{1}});
  P.add(Point{{2}});
  P.add(Point{{4}});
  auto r = cs_sandwich_check(P, 1.0);
  CHECK(r.mst == doctest::Approx(3.0));
  CHECK(r.value == doctest::Approx(3.0));
  CHECK(r.lower_ok);
  CHECK(r.upper_ok);

  PointMultiset two;
  two.add(Point{{1}});
  two.add(Point{{1 + 64}});
  auto r2 = cs_sandwich_check(two, 1.0);
  CHECK(r2.lower_ok);
  CHECK(r2.upper_ok);
  CHECK(r2.value >= 64.0);
  CHECK(r2.value <= 2.0 * 64.0 + 1e-9);
}

TEST_CASE("cs sandwich holds on 100 random instances") {
  for (uint64_t seed = 1; seed <= 100; ++seed) {
    InstanceSpec spec = InstanceSpec::parse("uniform:n=30,d=2,lambda=60");
    auto P = generate_instance(spec, seed);
    auto r = cs_sandwich_check(P, 0.5);
    CHECK(r.lower_ok);
    CHECK(r.upper_ok);
  }
}

namespace {

struct Built {
  QuadtreeConfig q;
  LevelStructure s;
  std::vector<DiscretizedLevel> blocks;
};

Built build(const PointMultiset& P, double eps, int alpha, uint64_t seed) {
  Built b;
  int64_t lambda = 1;
  for (const auto& [p, c] : P.counts())
    for (auto v : p.coords) lambda = std::max(lambda, v);
  b.q = QuadtreeConfig::make(static_cast<int>(P.support()[0].dim()), lambda,
                             delta_bound_for(P), eps, alpha, seed);
  b.s = build_levels(b.q);
  ShiftedGrids grids(b.q, b.s);
  b.blocks = all_vertex_sets(b.q, grids, b.s, P);
  return b;
}

}  // namespace

TEST_CASE("estimator_Z: single point degenerate value") {
  // With one vertex, y_t = z_t = 1 at every level and the level sum
  // telescopes exactly against the head term: Z = 0 (= the true MST).
  PointMultiset P;
  P.add(Point{{5}});
  auto b = build(P, 0.5, 2, 3);
  EstimatorParams params = EstimatorParams::from(b.q, b.s);
  auto z = estimator_Z(b.q, b.s, b.blocks, P, params);
  CHECK(std::fabs(z.value) < 1e-9);
  CHECK(!z.warnings.empty());
}

TEST_CASE("estimator_Z equals the ideal estimator with infinite thresholds") {
  for (uint64_t seed = 1; seed <= 8; ++seed) {
    InstanceSpec spec = InstanceSpec::parse("uniform:n=16,d=1,lambda=40");
    auto P = generate_instance(spec, seed);
    auto b = build(P, 0.5, 2, seed);
    EstimatorParams params = EstimatorParams::from(b.q, b.s, /*size_threshold=*/1e18);
    params.bfs_rounds = 4096;
    auto z = estimator_Z(b.q, b.s, b.blocks, P, params);
    auto ideal = ideal_estimator(b.q, b.s, b.blocks, P);
    CHECK(z.value == doctest::Approx(ideal.value).epsilon(1e-9));
  }
}

TEST_CASE("ideal estimator sandwich on random shifts") {
  InstanceSpec spec = InstanceSpec::parse("uniform:n=24,d=2,lambda=48");
  auto P = generate_instance(spec, 777);
  double mst = static_cast<double>(mst_oracle(P).cost);
  double delta = 0;
  int ok = 0;
  const int shifts = 100;
  for (int shift = 0; shift < shifts; ++shift) {
    auto b = build(P, 0.5, 2, 5000 + shift);
    delta = b.q.resolved_delta();
    auto v = ideal_estimator(b.q, b.s, b.blocks, P);
    if ((1 - 4 * delta) * mst <= v.value + 1e-9 && v.value <= (1 + delta) * mst + 1e-9) ++ok;
  }
  CHECK(ok >= 90);
}

TEST_CASE("ideal estimator on two points at distance Delta") {
  PointMultiset P;
  P.add(Point{{1}});
  P.add(Point{{1 + 256}});
  auto b = build(P, 0.5, 2, 11);
  double delta = b.q.resolved_delta();
  auto v = ideal_estimator(b.q, b.s, b.blocks, P);
  CHECK(v.value >= (1 - 4 * delta) * 256 - 1e-9);
  CHECK(v.value <= (1 + delta) * 256 + 1e-9);
}

TEST_CASE("ideal estimator on collinear {1,2,4} against a direct component count") {
  PointMultiset P;
  P.add(Point{{1}});
  P.add(Point{{2}});
  P.add(Point{{4}});
  auto b = build(P, 0.5, 2, 13);
  auto v = ideal_estimator(b.q, b.s, b.blocks, P);
  double delta = b.q.resolved_delta();
  double acc = 0;
  for (size_t blk = 0; blk < b.s.blocks.size(); ++blk) {
    BlockGraph g(b.blocks[blk]);
    for (int i = b.s.blocks[blk].first_level; i <= b.s.blocks[blk].last_level; ++i) {
      ThresholdGraphView view(g, b.s.levels[i]);
      acc += b.s.levels[i] * connected_components(view).count;
    }
  }
  double expect = 3 - std::pow(1 + delta, b.s.level_count_exponent + 1) + delta * acc;
  CHECK(v.value == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("estimator_Z term-by-term equals ideal on {1,2,4} with generous thresholds") {
  PointMultiset P;
  P.add(Point{{1}});
  P.add(Point{{2}});
  P.add(Point{{4}});
  auto b = build(P, 0.5, 2, 17);
  EstimatorParams params = EstimatorParams::from(b.q, b.s, 1e18);
  params.bfs_rounds = 4096;
  auto z = estimator_Z(b.q, b.s, b.blocks, P, params);
  auto ideal = ideal_estimator(b.q, b.s, b.blocks, P);
  REQUIRE(z.levels.size() == ideal.levels.size());
  CHECK(z.value == doctest::Approx(ideal.value).epsilon(1e-12));
}

TEST_CASE("sampled estimator: exhaustive mode reproduces estimator_Z exactly") {
  InstanceSpec spec = InstanceSpec::parse("clustered:n=20,d=2,lambda=32,clusters=3,spread=2");
  auto P = generate_instance(spec, 31);
  auto b = build(P, 0.5, 2, 31);
  EstimatorParams params = EstimatorParams::from(b.q, b.s, 16);
  auto z = estimator_Z(b.q, b.s, b.blocks, P, params);
  SampledEstimatorOptions so;
  so.mode = SampleMode::Exhaustive;
  auto zs = sampled_estimator(b.q, b.s, b.blocks, P, params, so);
  CHECK(zs.value == doctest::Approx(z.value).epsilon(1e-12));
}

TEST_CASE("sampled estimator concentrates around estimator_Z") {
  InstanceSpec spec = InstanceSpec::parse("uniform:n=24,d=1,lambda=64");
  auto P = generate_instance(spec, 55);
  auto b = build(P, 0.5, 2, 55);
  EstimatorParams params = EstimatorParams::from(b.q, b.s, 16);
  auto z = estimator_Z(b.q, b.s, b.blocks, P, params);
  double mst = static_cast<double>(mst_oracle(P).cost);

  const int trials = 50;
  const int k = 8;
  double sq_err = 0;
  for (int trial = 0; trial < trials; ++trial) {
    SampledEstimatorOptions so;
    so.samples_per_level = k;
    so.seed = 900 + trial;
    auto zs = sampled_estimator(b.q, b.s, b.blocks, P, params, so);
    sq_err += (zs.value - z.value) * (zs.value - z.value);
  }
  double emp_sd = std::sqrt(sq_err / trials);
  // variance-bound scaling: sd <= O(Delta^eps log Delta d beta / sqrt(k)) * MST
  double delta_eps = std::pow(static_cast<double>(b.q.delta_bound), b.q.epsilon);
  double bound = 2.0 * delta_eps * std::log2(static_cast<double>(b.q.delta_bound)) *
                 b.q.dimension * b.q.resolved_beta() / std::sqrt(static_cast<double>(k)) * mst;
  CHECK(emp_sd <= bound);
}

TEST_CASE("single-vertex levels contribute deterministically to the sampled estimator") {
  PointMultiset P;
  P.add(Point{{1}});
  P.add(Point{{2}});  // collapses to one vertex at coarse anchors
  auto b = build(P, 0.5, 2, 77);
  EstimatorParams params = EstimatorParams::from(b.q, b.s, 64);
  SampledEstimatorOptions s1, s2;
  s1.samples_per_level = 3;
  s1.seed = 1;
  s2.samples_per_level = 3;
  s2.seed = 2;
  auto a = sampled_estimator(b.q, b.s, b.blocks, P, params, s1);
  auto c = sampled_estimator(b.q, b.s, b.blocks, P, params, s2);
  REQUIRE(a.levels.size() == c.levels.size());
  for (size_t i = 0; i < a.levels.size(); ++i)
    if (a.levels[i].vertex_count == 1) CHECK(a.levels[i].min_sum == c.levels[i].min_sum);
}
