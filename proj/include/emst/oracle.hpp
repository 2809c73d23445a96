#pragma once

// Brute-force ground truth and instance generation: exact MST over the
// distinct points (Kruskal with lexicographic tie-break), exact diameter,
// and the seeded instance generators used by tests and the CLI.

#include <cstdint>
#include <string>
#include <vector>

#include "emst/geometry.hpp"

namespace emst {

struct MstEdge {
  Point a, b;
  int64_t weight = 0;
};

struct MstResult {
  int64_t cost = 0;
  std::vector<MstEdge> edges;
};

// Exact MST cost over the distinct points of P; duplicates contribute
// nothing. Deterministic tie-break by (weight, endpoint, endpoint).
MstResult mst_oracle(const PointMultiset& P);

// Independent second route (Prim-style) used for cross-checking.
int64_t mst_prim_cost(const PointMultiset& P);

int64_t exact_diameter(const PointMultiset& P);

// Generator specs, parsed from "name:key=value,key=value".
//   uniform:n=..,d=..,lambda=..      iid points
//   clustered:n=..,d=..,lambda=..,clusters=..,spread=..
//   grid:side=..,d=..,step=..        full lattice
//   cantor:n=..,base=..              hierarchical 1-D pairing instance
struct InstanceSpec {
  std::string generator;
  int64_t n = 16;
  int dimension = 1;
  int64_t lambda = 64;
  int64_t clusters = 3;
  int64_t spread = 2;
  int64_t side = 4;
  int64_t step = 1;
  int64_t base = 2;

  static InstanceSpec parse(const std::string& text);
  std::string version() const;  // generator name + version tag, for reports
};

PointMultiset generate_instance(const InstanceSpec& spec, uint64_t seed);

// The hierarchical pairing instance on the line: consecutive points joined
// with gaps 1,2,4,... so that G_{2^i} has n/2^{i+1} components and the MST
// cost is Theta(n log n). n must be a power of two.
PointMultiset generate_cantor(int64_t n, int64_t base = 2);

PointStream to_insert_stream(const PointMultiset& P, int64_t lambda, int dimension);

}  // namespace emst
