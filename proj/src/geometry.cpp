#include "emst/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "emst/prng.hpp"

namespace emst {

std::string Point::str() const {
  std::string s = "(";
  for (size_t i = 0; i < coords.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(coords[i]);
  }
  return s + ")";
}

int64_t l1_distance(const Point& a, const Point& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("l1_distance: dimension mismatch");
  int64_t d = 0;
  for (size_t i = 0; i < a.dim(); ++i) d += std::llabs(a.coords[i] - b.coords[i]);
  return d;
}

void PointMultiset::add(const Point& p, int64_t delta) {
  if (delta == 0) return;
  auto it = counts_.find(p);
  int64_t cur = (it == counts_.end()) ? 0 : it->second;
  int64_t next = cur + delta;
  if (next < 0) throw std::runtime_error("PointMultiset: delete of absent point " + p.str());
  total_ += delta;
  if (next == 0) {
    counts_.erase(it);
  } else if (it == counts_.end()) {
    counts_.emplace(p, next);
  } else {
    it->second = next;
  }
}

void PointMultiset::merge(const PointMultiset& other) {
  for (const auto& [p, c] : other.counts_) add(p, c);
}

int64_t PointMultiset::count(const Point& p) const {
  auto it = counts_.find(p);
  return it == counts_.end() ? 0 : it->second;
}

std::vector<Point> PointMultiset::support() const {
  std::vector<Point> out;
  out.reserve(counts_.size());
  for (const auto& [p, c] : counts_) out.push_back(p);
  return out;
}

PointMultiset apply_stream(const std::vector<StreamUpdate>& updates) {
  PointMultiset ms;
  for (const auto& u : updates) {
    if (u.sign != 1 && u.sign != -1) throw std::invalid_argument("stream update sign must be +-1");
    ms.add(u.point, u.sign);
  }
  return ms;
}

PointMultiset apply_stream(const PointStream& stream) { return apply_stream(stream.updates); }

PointStream parse_stream(std::istream& in) {
  PointStream s;
  std::string line;
  bool have_header = false;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t pos = line.find_first_not_of(" \t\r");
    if (pos == std::string::npos || line[pos] == '#') continue;
    std::istringstream ls(line);
    if (!have_header) {
      if (!(ls >> s.lambda >> s.dimension) || s.lambda < 1 || s.dimension < 1)
        throw std::runtime_error("stream: bad header at line " + std::to_string(lineno));
      have_header = true;
      continue;
    }
    char sign;
    ls >> sign;
    if (sign != '+' && sign != '-')
      throw std::runtime_error("stream: bad sign at line " + std::to_string(lineno));
    StreamUpdate u;
    u.sign = (sign == '+') ? 1 : -1;
    u.point.coords.resize(s.dimension);
    for (int i = 0; i < s.dimension; ++i) {
      if (!(ls >> u.point.coords[i]))
        throw std::runtime_error("stream: short update at line " + std::to_string(lineno));
    }
    s.updates.push_back(std::move(u));
  }
  if (!have_header) throw std::runtime_error("stream: missing LAMBDA D header");
  return s;
}

PointStream read_stream_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open stream file: " + path);
  return parse_stream(in);
}

void write_stream_file(const std::string& path, const PointStream& stream) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write stream file: " + path);
  out << stream.lambda << " " << stream.dimension << "\n";
  for (const auto& u : stream.updates) {
    out << (u.sign > 0 ? '+' : '-');
    for (auto c : u.point.coords) out << ' ' << c;
    out << "\n";
  }
}

void validate_stream(const PointStream& stream) {
  for (const auto& u : stream.updates) {
    if (static_cast<int>(u.point.dim()) != stream.dimension)
      throw std::runtime_error("stream: point dimension mismatch");
    for (auto c : u.point.coords)
      if (c < 1 || c > stream.lambda) throw std::runtime_error("stream: coordinate outside [1,Lambda]");
  }
}

namespace {

int64_t diameter_exact(const std::vector<Point>& pts) {
  int64_t best = 0;
  for (size_t i = 0; i < pts.size(); ++i)
    for (size_t j = i + 1; j < pts.size(); ++j) best = std::max(best, l1_distance(pts[i], pts[j]));
  return best;
}

}  // namespace

NormalizeResult normalize_aspect(const PointMultiset& points, double epsilon, double beta,
                                 uint64_t seed) {
  if (points.empty()) throw std::invalid_argument("normalize_aspect: empty multiset");
  if (epsilon <= 0 || epsilon >= 1) throw std::invalid_argument("normalize_aspect: epsilon in (0,1)");
  if (beta <= 0) throw std::invalid_argument("normalize_aspect: beta > 0");

  auto pts = points.support();
  NormalizeResult out;
  if (pts.size() <= 1) {  // diameter 0: returned unchanged
    out.points = points;
    return out;
  }
  const int d = static_cast<int>(pts[0].dim());
  const int64_t diam = diameter_exact(pts);
  const int64_t n = static_cast<int64_t>(points.total_size());

  // Grid side t/(beta*d) with t = eps*beta*diam/n, rounded down to a power
  // of two so snapped centers stay exactly representable.
  double side = epsilon * static_cast<double>(diam) / (static_cast<double>(n) * d);
  int g = static_cast<int>(std::floor(std::log2(std::max(side, 1e-30))));
  if (side < 1.0 || g < 0) {  // grid no coarser than the integer lattice: snapping is identity
    out.points = points;
    return out;
  }
  const int64_t s = int64_t{1} << g;

  Rng rng(seed, role_tag("normalize-shift"));
  std::vector<int64_t> shift(d);
  for (int i = 0; i < d; ++i) shift[i] = rng.next_in(0, s - 1);

  // Centers (k + 1/2)*s live on the half-side lattice; multiply by 2 and
  // divide by s to keep everything integral. One output unit = s/2 input units.
  PointMultiset snapped;
  for (const auto& [p, c] : points.counts()) {
    Point q;
    q.coords.resize(d);
    for (int i = 0; i < d; ++i) {
      int64_t k = (p.coords[i] + shift[i]) / s;  // coords >= 1, shift >= 0
      q.coords[i] = 2 * k + 1;
    }
    snapped.add(q, c);
  }
  out.points = std::move(snapped);
  out.scale_num = s;
  out.scale_den = 2;
  return out;
}

}  // namespace emst
