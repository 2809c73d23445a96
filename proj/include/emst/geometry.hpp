#pragma once

// Integer points under the l1 metric, turnstile stream semantics, and
// aspect-ratio normalization. All geometry is exact integer arithmetic;
// there is no floating-point anywhere in this module.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace emst {

struct Point {
  std::vector<int64_t> coords;

  Point() = default;
  explicit Point(std::vector<int64_t> c) : coords(std::move(c)) {}
  Point(std::initializer_list<int64_t> c) : coords(c) {}

  size_t dim() const { return coords.size(); }
  int64_t operator[](size_t i) const { return coords[i]; }

  bool operator==(const Point& o) const { return coords == o.coords; }
  bool operator!=(const Point& o) const { return coords != o.coords; }
  bool operator<(const Point& o) const { return coords < o.coords; }

  std::string str() const;
};

// Exact l1 distance; throws on dimension mismatch.
int64_t l1_distance(const Point& a, const Point& b);

// Multiset of points with nonnegative multiplicities. Deterministic
// (sorted) iteration order.
class PointMultiset {
 public:
  using Map = std::map<Point, int64_t>;

  // Adds `delta` copies of `p`; throws if the count would go negative.
  void add(const Point& p, int64_t delta = 1);

  // Count-wise union, for partitioned ingestion.
  void merge(const PointMultiset& other);

  int64_t count(const Point& p) const;
  size_t distinct_size() const { return counts_.size(); }
  int64_t total_size() const { return total_; }
  bool empty() const { return counts_.empty(); }

  const Map& counts() const { return counts_; }
  std::vector<Point> support() const;

  bool operator==(const PointMultiset& o) const { return counts_ == o.counts_; }

 private:
  Map counts_;
  int64_t total_ = 0;
};

struct StreamUpdate {
  int sign = +1;  // +1 insert, -1 delete
  Point point;
};

// A turnstile stream plus its declared domain.
struct PointStream {
  int64_t lambda = 0;
  int dimension = 0;
  std::vector<StreamUpdate> updates;
};

// Folds updates into the defined multiset. Order-independent; a delete of
// an absent point is a malformed stream and throws.
PointMultiset apply_stream(const PointStream& stream);
PointMultiset apply_stream(const std::vector<StreamUpdate>& updates);

// Stream file format (line-oriented text):
//   first non-comment line:  LAMBDA D
//   update lines:            + c1 c2 ... cD   |   - c1 c2 ... cD
// Blank lines and lines starting with '#' are ignored.
PointStream read_stream_file(const std::string& path);
PointStream parse_stream(std::istream& in);
void write_stream_file(const std::string& path, const PointStream& stream);

// Validates coordinates against [1, lambda]^d; throws on violation.
void validate_stream(const PointStream& stream);

struct NormalizeResult {
  PointMultiset points;   // integer coordinates, min nonzero distance >= 1
  int64_t scale_num = 1;  // one output unit equals scale_num/scale_den input units
  int64_t scale_den = 1;
};

// Aspect-ratio reduction: snap through a randomly shifted grid of side
// ~ eps*diam/(n*d) and rescale so coordinates stay integral with minimum
// nonzero distance >= 1. Output aspect ratio is O(n*d/eps) and the MST is
// preserved within a 3*eps relative error.
NormalizeResult normalize_aspect(const PointMultiset& points, double epsilon, double beta,
                                 uint64_t seed);

}  // namespace emst
