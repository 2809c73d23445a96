#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "emst/geometry.hpp"
#include "emst/oracle.hpp"
#include "emst/prng.hpp"

using namespace emst;

TEST_CASE("l1 distance basics") {
  CHECK(l1_distance(Point{{1, 1}}, Point{{1, 1}}) == 0);
  CHECK(l1_distance(Point{{1, 3}}, Point{{4, 1}}) == 5);
  CHECK_THROWS(l1_distance(Point{{1}}, Point{{1, 2}}));
}

TEST_CASE("l1 distance matches an independent summation on random pairs") {
  Rng rng(42, role_tag("test-l1"));
  for (int it = 0; it < 100; ++it) {
    int d = 1 + static_cast<int>(rng.next_below(5));
    Point a, b;
    for (int j = 0; j < d; ++j) {
      a.coords.push_back(rng.next_in(1, 1000));
      b.coords.push_back(rng.next_in(1, 1000));
    }
    int64_t expect = 0;  // second route: sort the two coords and subtract
    for (int j = 0; j < d; ++j) {
      int64_t lo = std::min(a.coords[j], b.coords[j]);
      int64_t hi = std::max(a.coords[j], b.coords[j]);
      expect += hi - lo;
    }
    CHECK(l1_distance(a, b) == expect);
    CHECK(l1_distance(b, a) == expect);
  }
}

TEST_CASE("l1 triangle inequality on sampled triples") {
  Rng rng(7, role_tag("test-l1-tri"));
  for (int it = 0; it < 300; ++it) {
    Point a, b, c;
    for (int j = 0; j < 4; ++j) {
      a.coords.push_back(rng.next_in(1, 200));
      b.coords.push_back(rng.next_in(1, 200));
      c.coords.push_back(rng.next_in(1, 200));
    }
    CHECK(l1_distance(a, c) <= l1_distance(a, b) + l1_distance(b, c));
  }
}

TEST_CASE("apply_stream basics") {
  Point p{{2, 3}};
  CHECK(apply_stream(std::vector<StreamUpdate>{{+1, p}, {+1, p}, {-1, p}}).count(p) == 1);
  CHECK(apply_stream(std::vector<StreamUpdate>{}).empty());
  CHECK_THROWS(apply_stream(std::vector<StreamUpdate>{{-1, p}}));
}

TEST_CASE("apply_stream equals a direct tally and is permutation invariant") {
  Rng rng(11, role_tag("test-stream"));
  std::vector<StreamUpdate> ups;
  PointMultiset tally;
  for (int it = 0; it < 1000; ++it) {
    Point p{{rng.next_in(1, 8), rng.next_in(1, 8)}};
    bool del = tally.count(p) > 0 && rng.next_unit() < 0.3;
    ups.push_back({del ? -1 : +1, p});
    tally.add(p, del ? -1 : +1);
  }
  CHECK(apply_stream(ups) == tally);

  // shuffle insert-only prefix segments: any reordering of a valid stream
  // that stays valid yields the same multiset; test with insert-only stream
  std::vector<StreamUpdate> inserts;
  for (const auto& u : ups)
    if (u.sign > 0) inserts.push_back(u);
  auto base = apply_stream(inserts);
  std::mt19937_64 g(99);
  for (int round = 0; round < 5; ++round) {
    std::shuffle(inserts.begin(), inserts.end(), g);
    CHECK(apply_stream(inserts) == base);
  }
}

TEST_CASE("stream file round trip") {
  PointStream s;
  s.lambda = 16;
  s.dimension = 2;
  s.updates = {{+1, Point{{1, 2}}}, {+1, Point{{3, 4}}}, {-1, Point{{1, 2}}}};
  std::string path = "test_stream_roundtrip.txt";
  write_stream_file(path, s);
  auto back = read_stream_file(path);
  CHECK(back.lambda == 16);
  CHECK(back.dimension == 2);
  REQUIRE(back.updates.size() == 3);
  CHECK(back.updates[2].sign == -1);
  CHECK(apply_stream(back) == apply_stream(s));

  std::istringstream bad("# comment only\n");
  CHECK_THROWS(parse_stream(bad));
}

TEST_CASE("normalize_aspect degenerate and 1-D example") {
  PointMultiset single;
  single.add(Point{{5}});
  auto r = normalize_aspect(single, 0.5, 10, 1);
  CHECK(r.points == single);

  PointMultiset line;
  line.add(Point{{1}});
  line.add(Point{{2}});
  line.add(Point{{1000000}});
  int64_t mst_before = mst_oracle(line).cost;
  int ok = 0;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    auto out = normalize_aspect(line, 0.5, 10, seed);
    auto pts = out.points.support();
    REQUIRE(pts.size() >= 2);
    int64_t dmin = 0, dmax = 0;
    for (size_t i = 0; i < pts.size(); ++i)
      for (size_t j = i + 1; j < pts.size(); ++j) {
        int64_t d = l1_distance(pts[i], pts[j]);
        dmax = std::max(dmax, d);
        if (dmin == 0 || d < dmin) dmin = d;
      }
    CHECK(dmin >= 1);
    // aspect ratio <= C * n * d / eps with a generous fixed C
    CHECK(static_cast<double>(dmax) / dmin <= 16.0 * 3 * 1 / 0.5);
    double mst_after = static_cast<double>(mst_oracle(out.points).cost) * out.scale_num /
                       out.scale_den;
    if (std::abs(mst_after - mst_before) <= 3 * 0.5 * mst_before) ++ok;
  }
  CHECK(ok == 20);
}

TEST_CASE("normalize_aspect preserves the MST within 3 eps across random instances") {
  Rng rng(5, role_tag("test-norm"));
  int ok = 0;
  const int trials = 100;
  for (int it = 0; it < trials; ++it) {
    InstanceSpec spec = InstanceSpec::parse("uniform:n=20,d=2,lambda=2000");
    auto P = generate_instance(spec, 1000 + it);
    double eps = 0.25;
    auto out = normalize_aspect(P, eps, 10, it);
    double before = static_cast<double>(mst_oracle(P).cost);
    double after = static_cast<double>(mst_oracle(out.points).cost) *
                   static_cast<double>(out.scale_num) / static_cast<double>(out.scale_den);
    if (std::abs(after - before) <= 3 * eps * before + 1e-9) ++ok;
    // aspect bound with a fixed measured constant
    auto pts = out.points.support();
    int64_t dmin = 0, dmax = 0;
    for (size_t i = 0; i < pts.size(); ++i)
      for (size_t j = i + 1; j < pts.size(); ++j) {
        int64_t d = l1_distance(pts[i], pts[j]);
        dmax = std::max(dmax, d);
        if (d > 0 && (dmin == 0 || d < dmin)) dmin = d;
      }
    if (dmin > 0) CHECK(static_cast<double>(dmax) / dmin <= 8.0 * 20 * 2 / eps);
  }
  CHECK(ok == trials);
}
