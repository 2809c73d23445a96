#include "emst/sketch/ksparse.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "emst/sketch/serialize.hpp"

namespace emst {

namespace {

constexpr uint64_t kRoleRow = role_tag("ksparse-row");
constexpr uint64_t kRoleFp = role_tag("ksparse-fp");

// Attempts to read a single (index, value) out of a one-sparse cell.
std::optional<std::pair<SketchIndex, int64_t>> read_one_sparse(const KSparseCell& c,
                                                               uint64_t seed) {
  if (c.count == 0) return std::nullopt;
  int64_t v = c.count;
  SketchIndex u = c.ixsum;
  bool neg = false;
  if (v < 0) {  // interpret the wrapped sum for a negative single value
    neg = true;
    v = -v;
    u = static_cast<SketchIndex>(0) - u;
  }
  if (u % static_cast<SketchIndex>(v) != 0) return std::nullopt;
  SketchIndex idx = u / static_cast<SketchIndex>(v);
  if (idx >> kMaxIndexBits) return std::nullopt;
  uint64_t expect = mulmod61(static_cast<uint64_t>(v % kMersenne61),
                             fingerprint61(seed, kRoleFp, idx));
  if (neg) expect = (expect == 0) ? 0 : kMersenne61 - expect;
  if (expect != c.fp) return std::nullopt;
  return std::make_pair(idx, neg ? -v : v);
}

}  // namespace

KSparseSketch::KSparseSketch(int k, uint64_t seed, double delta_fail) : k_(k), seed_(seed) {
  if (k < 1) throw std::invalid_argument("ksparse: k >= 1");
  buckets_ = std::max(4, 2 * k);
  rows_ = std::max(6, static_cast<int>(std::ceil(std::log2(std::max(2.0, k / delta_fail)) / 2.0)));
  row_hash_.reserve(rows_);
  for (int r = 0; r < rows_; ++r) row_hash_.emplace_back(seed, prf64(seed, kRoleRow, r));
  cells_.assign(static_cast<size_t>(rows_) * buckets_, KSparseCell{});
}

void KSparseSketch::update(SketchIndex index, int64_t delta) {
  if (index >> kMaxIndexBits) throw std::invalid_argument("ksparse: index wider than 96 bits");
  if (delta == 0) return;
  uint64_t fp = fingerprint61(seed_, kRoleFp, index);
  uint64_t dmag = static_cast<uint64_t>(delta < 0 ? -delta : delta) % kMersenne61;
  uint64_t dfp = mulmod61(dmag, fp);
  if (delta < 0 && dfp != 0) dfp = kMersenne61 - dfp;
  for (int r = 0; r < rows_; ++r) {
    KSparseCell& c = cell(r, row_hash_[r].bucket(index, buckets_));
    c.count += delta;
    c.ixsum += static_cast<SketchIndex>(delta) * index;  // wraps mod 2^128, stays linear
    c.fp = addmod61(c.fp, dfp);
  }
}

void KSparseSketch::merge(const KSparseSketch& other) {
  if (seed_ != other.seed_ || k_ != other.k_ || rows_ != other.rows_ ||
      buckets_ != other.buckets_)
    throw std::invalid_argument("ksparse: merge shape/seed mismatch");
  for (size_t i = 0; i < cells_.size(); ++i) {
    cells_[i].count += other.cells_[i].count;
    cells_[i].ixsum += other.cells_[i].ixsum;
    cells_[i].fp = addmod61(cells_[i].fp, other.cells_[i].fp);
  }
}

bool KSparseSketch::definitely_zero() const {
  for (const auto& c : cells_)
    if (!c.zero()) return false;
  return true;
}

std::optional<std::vector<std::pair<SketchIndex, int64_t>>> KSparseSketch::decode() const {
  KSparseSketch work = *this;
  std::vector<std::pair<SketchIndex, int64_t>> out;
  bool progress = true;
  while (progress) {
    progress = false;
    for (size_t i = 0; i < work.cells_.size() && static_cast<int>(out.size()) <= k_; ++i) {
      auto item = read_one_sparse(work.cells_[i], seed_);
      if (!item) continue;
      out.push_back(*item);
      work.update(item->first, -item->second);
      progress = true;
    }
    if (static_cast<int>(out.size()) > k_) return std::nullopt;  // more than k recovered
  }
  if (!work.definitely_zero()) return std::nullopt;  // residual mass: not k-sparse (or collision)
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<uint8_t> KSparseSketch::serialize() const {
  BlobWriter w;
  w.header(SketchKind::KSparse, seed_);
  w.u32(static_cast<uint32_t>(k_));
  w.u32(static_cast<uint32_t>(rows_));
  w.u32(static_cast<uint32_t>(buckets_));
  for (const auto& c : cells_) {
    w.i64(c.count);
    w.u128(c.ixsum);
    w.u64(c.fp);
  }
  return w.take();
}

KSparseSketch KSparseSketch::deserialize(const std::vector<uint8_t>& blob, size_t* offset) {
  BlobReader r(blob, offset ? *offset : 0);
  uint64_t seed = r.header(SketchKind::KSparse);
  int k = static_cast<int>(r.u32());
  int rows = static_cast<int>(r.u32());
  int buckets = static_cast<int>(r.u32());
  KSparseSketch s(k, seed);
  if (s.rows_ != rows || s.buckets_ != buckets)
    throw std::runtime_error("ksparse: blob shape mismatch");
  for (auto& c : s.cells_) {
    c.count = r.i64();
    c.ixsum = r.u128();
    c.fp = r.u64();
  }
  if (offset) *offset = r.offset();
  return s;
}

}  // namespace emst
