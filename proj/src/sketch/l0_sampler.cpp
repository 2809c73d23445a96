#include "emst/sketch/l0_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "emst/field_hash.hpp"
#include "emst/sketch/serialize.hpp"

namespace emst {

namespace {

constexpr uint64_t kRoleLevel = role_tag("l0-level-hash");
constexpr uint64_t kRoleRank = role_tag("l0-rank-hash");
constexpr uint64_t kRoleSub = role_tag("l0-sub-sketch");
constexpr uint64_t kRoleEstBucket = role_tag("l0est-bucket");
constexpr uint64_t kRoleEstLevel = role_tag("l0est-level");
constexpr uint64_t kRoleEstFp = role_tag("l0est-fp");

uint64_t index_hash(uint64_t seed, uint64_t role, SketchIndex index) {
  return prf64(seed, role, static_cast<uint64_t>(index),
               static_cast<uint64_t>(index >> 64) ^ 0x51ed2701ULL);
}

}  // namespace

L0Sampler::L0Sampler(uint64_t seed, int levels, int per_level_k) : seed_(seed) {
  if (levels < 1 || levels > 64) throw std::invalid_argument("l0sampler: levels in [1,64]");
  sketches_.reserve(levels);
  for (int l = 0; l < levels; ++l)
    sketches_.emplace_back(per_level_k, prf64(seed, kRoleSub, l));
}

int L0Sampler::level_of(SketchIndex index) const {
  uint64_t h = index_hash(seed_, kRoleLevel, index);
  // level l contains the index iff the top l bits of h are all zero
  int lead = h == 0 ? 64 : __builtin_clzll(h);
  return std::min<int>(lead, levels() - 1);
}

uint64_t L0Sampler::rank_hash(SketchIndex index) const {
  return index_hash(seed_, kRoleRank, index);
}

void L0Sampler::update(SketchIndex index, int64_t delta) {
  int top = level_of(index);
  for (int l = 0; l <= top; ++l) sketches_[l].update(index, delta);
}

void L0Sampler::merge(const L0Sampler& other) {
  if (seed_ != other.seed_ || levels() != other.levels())
    throw std::invalid_argument("l0sampler: merge mismatch");
  for (int l = 0; l < levels(); ++l) sketches_[l].merge(other.sketches_[l]);
}

std::optional<SketchIndex> L0Sampler::sample() const {
  // Deepest level with a decodable, nonempty survivor set. Levels are
  // nested, so a FAIL below the first nonempty decode means the whole
  // sample is unreliable and we report FAIL.
  for (int l = levels() - 1; l >= 0; --l) {
    auto items = sketches_[l].decode();
    if (!items) return std::nullopt;
    if (items->empty()) continue;
    SketchIndex best = (*items)[0].first;
    uint64_t best_rank = rank_hash(best);
    for (const auto& [idx, val] : *items) {
      uint64_t r = rank_hash(idx);
      if (r < best_rank) {
        best_rank = r;
        best = idx;
      }
    }
    return best;
  }
  return std::nullopt;  // zero vector
}

std::vector<uint8_t> L0Sampler::serialize() const {
  BlobWriter w;
  w.header(SketchKind::L0Sampler, seed_);
  w.u32(static_cast<uint32_t>(sketches_.size()));
  auto blob = w.take();
  for (const auto& s : sketches_) {
    auto sub = s.serialize();
    blob.insert(blob.end(), sub.begin(), sub.end());
  }
  return blob;
}

L0Sampler L0Sampler::deserialize(const std::vector<uint8_t>& blob, size_t* offset) {
  size_t off = offset ? *offset : 0;
  BlobReader r(blob, off);
  uint64_t seed = r.header(SketchKind::L0Sampler);
  int levels = static_cast<int>(r.u32());
  off = r.offset();
  L0Sampler s(seed, levels);
  s.sketches_.clear();
  for (int l = 0; l < levels; ++l) s.sketches_.push_back(KSparseSketch::deserialize(blob, &off));
  if (offset) *offset = off;
  return s;
}

L0Estimator::L0Estimator(uint64_t seed, double eps0, int levels, int reps)
    : seed_(seed), eps0_(eps0), levels_(levels), reps_(reps) {
  if (eps0 <= 0 || eps0 >= 1) throw std::invalid_argument("l0est: eps0 in (0,1)");
  buckets_ = std::max(16, static_cast<int>(std::ceil(24.0 / (eps0 * eps0))));
  fp_.assign(reps_, std::vector<uint64_t>(static_cast<size_t>(levels_) * buckets_, 0));
}

void L0Estimator::update(SketchIndex index, int64_t delta) {
  if (delta == 0) return;
  uint64_t dmag = static_cast<uint64_t>(delta < 0 ? -delta : delta) % kMersenne61;
  for (int rep = 0; rep < reps_; ++rep) {
    uint64_t fp = fingerprint61(prf64(seed_, kRoleEstFp, rep), kRoleEstFp, index);
    uint64_t dfp = mulmod61(dmag, fp);
    if (delta < 0 && dfp != 0) dfp = kMersenne61 - dfp;
    uint64_t lh = index_hash(prf64(seed_, kRoleEstLevel, rep), kRoleEstLevel, index);
    int top = std::min<int>(lh == 0 ? 64 : __builtin_clzll(lh), levels_ - 1);
    uint64_t bucket = index_hash(prf64(seed_, kRoleEstBucket, rep), kRoleEstBucket, index) %
                      static_cast<uint64_t>(buckets_);
    for (int l = 0; l <= top; ++l) {
      auto& cell = fp_[rep][static_cast<size_t>(l) * buckets_ + bucket];
      cell = addmod61(cell, dfp);
    }
  }
}

void L0Estimator::merge(const L0Estimator& other) {
  if (seed_ != other.seed_ || levels_ != other.levels_ || reps_ != other.reps_ ||
      buckets_ != other.buckets_)
    throw std::invalid_argument("l0est: merge mismatch");
  for (int rep = 0; rep < reps_; ++rep)
    for (size_t i = 0; i < fp_[rep].size(); ++i)
      fp_[rep][i] = addmod61(fp_[rep][i], other.fp_[rep][i]);
}

double L0Estimator::estimate() const {
  std::vector<double> per_rep(reps_);
  for (int rep = 0; rep < reps_; ++rep) {
    double est = 0;
    for (int l = 0; l < levels_; ++l) {
      int occ = 0;
      for (int b = 0; b < buckets_; ++b)
        if (fp_[rep][static_cast<size_t>(l) * buckets_ + b] != 0) ++occ;
      if (occ == 0) {
        est = 0;
        break;
      }
      if (occ <= 0.7 * buckets_) {  // linear-counting inversion is reliable here
        double frac = static_cast<double>(occ) / buckets_;
        est = std::ldexp(-static_cast<double>(buckets_) * std::log1p(-frac), l);
        break;
      }
      if (l == levels_ - 1) {  // saturated everywhere; report the cap
        double frac = std::min(0.999, static_cast<double>(occ) / buckets_);
        est = std::ldexp(-static_cast<double>(buckets_) * std::log1p(-frac), l);
      }
    }
    per_rep[rep] = est;
  }
  std::sort(per_rep.begin(), per_rep.end());
  return per_rep[reps_ / 2];
}

std::vector<uint8_t> L0Estimator::serialize() const {
  BlobWriter w;
  w.header(SketchKind::L0Estimator, seed_);
  w.f64(eps0_);
  w.u32(static_cast<uint32_t>(levels_));
  w.u32(static_cast<uint32_t>(reps_));
  w.u32(static_cast<uint32_t>(buckets_));
  for (const auto& rep : fp_)
    for (uint64_t v : rep) w.u64(v);
  return w.take();
}

L0Estimator L0Estimator::deserialize(const std::vector<uint8_t>& blob, size_t* offset) {
  BlobReader r(blob, offset ? *offset : 0);
  uint64_t seed = r.header(SketchKind::L0Estimator);
  double eps0 = r.f64();
  int levels = static_cast<int>(r.u32());
  int reps = static_cast<int>(r.u32());
  int buckets = static_cast<int>(r.u32());
  L0Estimator s(seed, eps0, levels, reps);
  if (s.buckets_ != buckets) throw std::runtime_error("l0est: blob shape mismatch");
  for (auto& rep : s.fp_)
    for (auto& v : rep) v = r.u64();
  if (offset) *offset = r.offset();
  return s;
}

}  // namespace emst
