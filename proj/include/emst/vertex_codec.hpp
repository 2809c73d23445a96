#pragma once

// Bit-packs discretized vertex coordinates (fine units, nonnegative) into
// sketch indices of at most 96 bits, and back. The packing is fixed by the
// domain bounds, never by the data, so it is valid inside linear sketches.

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "emst/geometry.hpp"
#include "emst/sketch/ksparse.hpp"

namespace emst {

class VertexCodec {
 public:
  // max_coord: inclusive upper bound on any fine-unit coordinate.
  VertexCodec(int dimension, int64_t max_coord) : dim_(dimension) {
    bits_ = 1;
    while ((int64_t{1} << bits_) <= max_coord) ++bits_;
    if (dim_ * bits_ > kMaxIndexBits)
      throw std::invalid_argument(
          "vertex codec: dimension * coordinate bits exceeds the 96-bit sketch "
          "index budget; reduce Lambda or the dimension");
  }

  SketchIndex encode(const Point& p) const {
    SketchIndex out = 0;
    for (int j = dim_ - 1; j >= 0; --j) {
      if (p.coords[j] < 0 || (p.coords[j] >> bits_) != 0)
        throw std::invalid_argument("vertex codec: coordinate out of range");
      out = (out << bits_) | static_cast<SketchIndex>(p.coords[j]);
    }
    return out;
  }

  Point decode(SketchIndex ix) const {
    Point p;
    p.coords.resize(dim_);
    SketchIndex mask = (static_cast<SketchIndex>(1) << bits_) - 1;
    for (int j = 0; j < dim_; ++j) {
      p.coords[j] = static_cast<int64_t>(ix & mask);
      ix >>= bits_;
    }
    return p;
  }

  int bits_per_coord() const { return bits_; }

 private:
  int dim_;
  int bits_;
};

}  // namespace emst
