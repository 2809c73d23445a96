#include <cmath>
#include <sstream>

#include "emst/components.hpp"
#include "emst/lsh.hpp"
#include "emst/oracle.hpp"
#include "emst/prng.hpp"
#include "emst/runner.hpp"
#include "emst/sketch/ksparse.hpp"
#include "emst/sketch/l0_sampler.hpp"
#include "emst/sketch/pstable.hpp"

namespace emst {

namespace {

using Check = std::pair<std::string, bool>;

Check check_l1_triangle() {
  Rng rng(7, role_tag("selftest-l1"));
  for (int it = 0; it < 500; ++it) {
    Point a, b, c;
    for (int j = 0; j < 3; ++j) {
      a.coords.push_back(rng.next_in(1, 100));
      b.coords.push_back(rng.next_in(1, 100));
      c.coords.push_back(rng.next_in(1, 100));
    }
    if (l1_distance(a, c) > l1_distance(a, b) + l1_distance(b, c))
      return {"l1 triangle inequality", false};
  }
  return {"l1 triangle inequality", true};
}

Check check_stream_permutation() {
  Rng rng(11, role_tag("selftest-stream"));
  std::vector<StreamUpdate> ups;
  PointMultiset direct;
  for (int it = 0; it < 300; ++it) {
    Point p{{rng.next_in(1, 6), rng.next_in(1, 6)}};
    ups.push_back({+1, p});
    direct.add(p, 1);
  }
  // interleave deletions of present points
  for (int it = 0; it < 60; ++it) {
    auto support = direct.support();
    const Point& p = support[rng.next_below(support.size())];
    ups.push_back({-1, p});
    direct.add(p, -1);
  }
  auto a = apply_stream(ups);
  // shuffle only insert-before-delete order cannot be violated arbitrarily,
  // so compare against the direct tally instead.
  return {"apply_stream tally", a == direct};
}

Check check_ksparse() {
  for (uint64_t seed = 1; seed <= 60; ++seed) {
    KSparseSketch s(8, seed);
    Rng rng(seed, role_tag("selftest-ks"));
    std::map<uint64_t, int64_t> truth;
    while (truth.size() < 6) truth[rng.next_below(1'000'000)] += 1 + rng.next_below(5);
    for (auto& [i, v] : truth) s.update(i, v);
    auto dec = s.decode();
    if (!dec || dec->size() != truth.size()) return {"ksparse exact recovery", false};
    for (auto& [i, v] : *dec)
      if (truth[static_cast<uint64_t>(i)] != v) return {"ksparse exact recovery", false};
    // overfull must fail
    KSparseSketch s2(4, seed);
    for (int i = 0; i < 9; ++i) s2.update(1000 + i, 1);
    if (s2.decode()) return {"ksparse overflow fail", false};
  }
  return {"ksparse recovery", true};
}

Check check_l0_sampler() {
  L0Sampler s(123);
  s.update(7, 3);
  auto got = s.sample();
  if (!got || *got != 7) return {"l0 sampler singleton", false};
  std::map<uint64_t, int> freq;
  for (uint64_t seed = 0; seed < 2000; ++seed) {
    L0Sampler t(seed);
    for (uint64_t i = 0; i < 4; ++i) t.update(100 + i, 1);
    auto v = t.sample();
    if (v) ++freq[static_cast<uint64_t>(*v)];
  }
  for (auto& [i, f] : freq)
    if (f < 350 || f > 650) return {"l0 sampler roughly uniform", false};
  return {"l0 sampler", true};
}

Check check_l0_estimator() {
  L0Estimator e(99, 0.1);
  for (int i = 0; i < 50; ++i) e.update(2000 + i, 2);
  double est = e.estimate();
  return {"l0 estimator within 20%", est > 40 && est < 60};
}

Check check_pstable() {
  PStableSketch s(1.0, 77, 801);
  s.update(42, 5);
  double est = s.estimate();
  return {"p-stable single coordinate", est > 3.8 && est < 6.2};
}

Check check_lsh() {
  LshConfig cfg;
  cfg.scale = 4;
  cfg.precision = 0.5;
  cfg.gamma_radius = 64;
  cfg.seed = 5;
  LshFunction h(cfg);
  std::vector<Point> pts;
  Rng rng(3, role_tag("selftest-lsh"));
  for (int i = 0; i < 24; ++i) pts.push_back(Point{{rng.next_in(-40, 40), rng.next_in(-40, 40)}});
  auto ids = h.hash_all(pts);
  for (size_t i = 0; i < pts.size(); ++i)
    for (size_t j = i + 1; j < pts.size(); ++j)
      if (ids[i] == ids[j] && l1_distance(pts[i], pts[j]) > 2 * cfg.scale / cfg.precision)
        return {"lsh collision diameter", false};
  return {"lsh collision diameter", true};
}

Check check_exp_argmax() {
  // t_i with mean lambda_i: argmax lands on i with frequency lambda_i/sum.
  int wins = 0;
  const int trials = 20000;
  for (int it = 0; it < trials; ++it) {
    double t1 = exp_from_seed(1.0 / 3.0, 17, 1, it);
    double t2 = exp_from_seed(1.0, 17, 2, it);
    if (t1 > t2) ++wins;
  }
  double f = static_cast<double>(wins) / trials;
  return {"exponential argmax frequency", std::fabs(f - 0.75) < 0.02};
}

Check check_mst_cross() {
  for (uint64_t seed = 1; seed <= 30; ++seed) {
    InstanceSpec spec = InstanceSpec::parse("uniform:n=24,d=2,lambda=40");
    auto P = generate_instance(spec, seed);
    if (mst_oracle(P).cost != mst_prim_cost(P)) return {"mst kruskal = prim", false};
  }
  return {"mst kruskal = prim", true};
}

Check check_snap_nesting() {
  QuadtreeConfig q;
  q.dimension = 2;
  q.lambda = 64;
  q.delta_bound = 128;
  q.epsilon = 0.5;
  q.alpha = 2;
  q.seed = 31;
  q.validate();
  auto st = build_levels(q);
  ShiftedGrids grids(q, st);
  Rng rng(13, role_tag("selftest-snap"));
  for (int it = 0; it < 400; ++it) {
    Point p{{rng.next_in(1, 64), rng.next_in(1, 64)}};
    Point q1{{rng.next_in(1, 64), rng.next_in(1, 64)}};
    for (size_t b = 0; b + 1 < st.blocks.size(); ++b) {
      if (grids.snap(b, p) == grids.snap(b, q1) &&
          !(grids.snap(b + 1, p) == grids.snap(b + 1, q1)))
        return {"snap nesting", false};
    }
  }
  return {"snap nesting", true};
}

}  // namespace

bool run_selftest(std::string& log) {
  std::ostringstream os;
  bool all_ok = true;
  for (const auto& [name, ok] : {check_l1_triangle(), check_stream_permutation(), check_ksparse(),
                                 check_l0_sampler(), check_l0_estimator(), check_pstable(),
                                 check_lsh(), check_exp_argmax(), check_mst_cross(),
                                 check_snap_nesting()}) {
    os << (ok ? "ok   " : "FAIL ") << name << "\n";
    all_ok = all_ok && ok;
  }
  log = os.str();
  return all_ok;
}

}  // namespace emst
