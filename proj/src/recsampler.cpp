#include "emst/recsampler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "emst/field_hash.hpp"
#include "emst/prng.hpp"

namespace emst {

namespace {

constexpr uint64_t kRoleExp1 = role_tag("rs-exp1");
constexpr uint64_t kRoleExp2 = role_tag("rs-exp2");
constexpr uint64_t kRoleExp3 = role_tag("rs-exp3");
constexpr uint64_t kRoleAlpha = role_tag("rs-alpha");
constexpr uint64_t kRoleRow = role_tag("rs-row");
constexpr uint64_t kRoleTotal = role_tag("rs-total");

// All random variables are rounded to the 2^-40 grid for reproducibility.
double round_grid(double v) {
  double scaled = std::nearbyint(std::ldexp(v, 40));
  double r = std::ldexp(scaled, -40);
  return r;
}

double rounded_exp(uint64_t seed, uint64_t role, uint64_t c1, uint64_t c2) {
  double u = to_unit_pos(prf64(seed, role, c1, c2));
  double v = -std::log(u);
  v = round_grid(v);
  return std::max(v, 0x1.0p-40);
}

}  // namespace

double RecSamplerShape::resolved_gamma() const {
  if (gamma > 0) return gamma;
  return std::min(0.02, 1.0 / (48.0 * samples * samples));
}

void RecSamplerShape::validate() const {
  if (n1 < 1 || n2 < 1 || n3 < 1) throw std::invalid_argument("recsampler: sizes >= 1");
  if (p <= 0 || p > 2) throw std::invalid_argument("recsampler: p in (0,2]");
  if (samples < 1) throw std::invalid_argument("recsampler: samples >= 1");
  if (rows < 1 || rows > 64 || buckets < 2 || reps < 3)
    throw std::invalid_argument("recsampler: bad tower shape");
}

RecSamplerShape l0_mode_shape(int64_t n1, int64_t n2, int64_t n3, int samples,
                              int64_t max_magnitude) {
  RecSamplerShape s;
  s.n1 = n1;
  s.n2 = n2;
  s.n3 = n3;
  s.samples = samples;
  // |x|^p = exp(p ln |x|) stays within a fraction of a percent of 1.
  s.p = std::min(0.01, 0.005 / std::log(2.0 + static_cast<double>(max_magnitude)));
  return s;
}

RecSamplerSketch::RecSamplerSketch(const RecSamplerShape& shape, uint64_t seed)
    : shape_(shape),
      seed_(seed),
      total_(shape.p, prf64(seed, kRoleTotal, 0), /*reps=*/257) {
  shape_.validate();
  log_median_dp_ = std::log(p_stable_abs_median(shape_.p));
  auto make_tower = [&](uint64_t tag) {
    Tower t;
    t.row_hash.reserve(shape_.rows);
    for (int r = 0; r < shape_.rows; ++r)
      t.row_hash.emplace_back(seed_, prf64(seed_, kRoleRow, tag, r));
    t.cells.assign(static_cast<size_t>(shape_.rows) * shape_.buckets * shape_.reps, 0.0L);
    return t;
  };
  tower1_ = make_tower(0);
  tower2_.reserve(shape_.samples);
  for (int l1 = 0; l1 < shape_.samples; ++l1) tower2_.push_back(make_tower(1000 + l1));
  tower3_.resize(shape_.samples);
  for (int l1 = 0; l1 < shape_.samples; ++l1) {
    tower3_[l1].reserve(shape_.samples);
    for (int l2 = 0; l2 < shape_.samples; ++l2)
      tower3_[l1].push_back(make_tower(1'000'000 + l1 * 1000 + l2));
  }
}

size_t RecSamplerSketch::cell_count() const {
  size_t per = tower1_.cells.size();
  return per * (1 + static_cast<size_t>(shape_.samples) +
                static_cast<size_t>(shape_.samples) * shape_.samples);
}

double RecSamplerSketch::exp1(int64_t i1) const {
  return rounded_exp(seed_, kRoleExp1, static_cast<uint64_t>(i1), 0);
}

double RecSamplerSketch::exp2(int l1, int64_t i1, int64_t i2) const {
  uint64_t key = static_cast<uint64_t>(i1) * static_cast<uint64_t>(shape_.n2) +
                 static_cast<uint64_t>(i2);
  return rounded_exp(seed_, kRoleExp2, key, static_cast<uint64_t>(l1) + 1);
}

double RecSamplerSketch::exp3(int l1, int l2, int64_t i1, int64_t i2, int64_t i3) const {
  uint64_t key = (static_cast<uint64_t>(i1) * static_cast<uint64_t>(shape_.n2) +
                  static_cast<uint64_t>(i2)) *
                     static_cast<uint64_t>(shape_.n3) +
                 static_cast<uint64_t>(i3);
  return rounded_exp(seed_, kRoleExp3, key,
                     (static_cast<uint64_t>(l1) << 20) | (static_cast<uint64_t>(l2) + 1));
}

long double& RecSamplerSketch::cell(Tower& t, int row, uint64_t bucket, int rep) {
  return t.cells[(static_cast<size_t>(row) * shape_.buckets + bucket) * shape_.reps + rep];
}

void RecSamplerSketch::tower_update(Tower& t, SketchIndex key, long double scaled,
                                    const double* alphas) {
  t.med_valid = false;
  for (int r = 0; r < shape_.rows; ++r) {
    uint64_t b = t.row_hash[r].bucket(key, shape_.buckets);
    long double* base =
        &t.cells[(static_cast<size_t>(r) * shape_.buckets + b) * shape_.reps];
    for (int rep = 0; rep < shape_.reps; ++rep)
      base[rep] += scaled * static_cast<long double>(alphas[rep]);
  }
}

void RecSamplerSketch::update(int64_t i1, int64_t i2, int64_t i3, int64_t delta) {
  if (i1 < 0 || i1 >= shape_.n1 || i2 < 0 || i2 >= shape_.n2 || i3 < 0 || i3 >= shape_.n3)
    throw std::invalid_argument("recsampler: index out of range");
  if (delta == 0) return;

  const double inv_p = 1.0 / shape_.p;
  SketchIndex key2 = static_cast<SketchIndex>(i1) * static_cast<SketchIndex>(shape_.n2) +
                     static_cast<SketchIndex>(i2);
  SketchIndex key3 =
      key2 * static_cast<SketchIndex>(shape_.n3) + static_cast<SketchIndex>(i3);

  // Stable coefficients are shared by all towers for this coordinate.
  thread_local std::vector<double> alphas;
  alphas.resize(shape_.reps);
  uint64_t abase = prf64(seed_, kRoleAlpha, static_cast<uint64_t>(key3),
                         static_cast<uint64_t>(key3 >> 64) ^ 0xa1b2c3ULL);
  for (int rep = 0; rep < shape_.reps; ++rep)
    alphas[rep] = round_grid(p_stable_from_seed(shape_.p, seed_, kRoleAlpha, abase + rep));

  total_.update_scaled(key3, static_cast<double>(delta));

  const long double t1 = exp1(i1);
  tower_update(tower1_, static_cast<SketchIndex>(i1),
               static_cast<long double>(delta) * std::pow(t1, -static_cast<long double>(inv_p)),
               alphas.data());
  for (int l1 = 0; l1 < shape_.samples; ++l1) {
    const long double t2 = exp2(l1, i1, i2);
    const long double denom2 = std::pow(t1 * t2, -static_cast<long double>(inv_p));
    tower_update(tower2_[l1], key2, static_cast<long double>(delta) * denom2, alphas.data());
    for (int l2 = 0; l2 < shape_.samples; ++l2) {
      const long double t3 = exp3(l1, l2, i1, i2, i3);
      const long double denom3 =
          std::pow(t1 * t2 * t3, -static_cast<long double>(inv_p));
      tower_update(tower3_[l1][l2], key3, static_cast<long double>(delta) * denom3,
                   alphas.data());
    }
  }
}

void RecSamplerSketch::merge(const RecSamplerSketch& other) {
  if (seed_ != other.seed_ || shape_.n1 != other.shape_.n1 || shape_.n2 != other.shape_.n2 ||
      shape_.n3 != other.shape_.n3 || shape_.samples != other.shape_.samples ||
      shape_.rows != other.shape_.rows || shape_.buckets != other.shape_.buckets ||
      shape_.reps != other.shape_.reps)
    throw std::invalid_argument("recsampler: merge mismatch");
  auto add = [](Tower& a, const Tower& b) {
    for (size_t i = 0; i < a.cells.size(); ++i) a.cells[i] += b.cells[i];
  };
  add(tower1_, other.tower1_);
  for (int l1 = 0; l1 < shape_.samples; ++l1) {
    add(tower2_[l1], other.tower2_[l1]);
    for (int l2 = 0; l2 < shape_.samples; ++l2) add(tower3_[l1][l2], other.tower3_[l1][l2]);
  }
  total_.merge(other.total_);
}

void RecSamplerSketch::refresh_medians(const Tower& t) const {
  t.log_med.assign(static_cast<size_t>(shape_.rows) * shape_.buckets, -1e30L);
  thread_local std::vector<long double> mags;
  mags.resize(shape_.reps);
  for (int r = 0; r < shape_.rows; ++r) {
    for (int b = 0; b < shape_.buckets; ++b) {
      const long double* base =
          &t.cells[(static_cast<size_t>(r) * shape_.buckets + b) * shape_.reps];
      for (int rep = 0; rep < shape_.reps; ++rep) mags[rep] = fabsl(base[rep]);
      auto mid = mags.begin() + shape_.reps / 2;
      std::nth_element(mags.begin(), mid, mags.end());
      if (*mid > 0)
        t.log_med[static_cast<size_t>(r) * shape_.buckets + b] =
            logl(*mid) - static_cast<long double>(log_median_dp_);
    }
  }
  t.med_valid = true;
}

long double RecSamplerSketch::tower_log_median(const Tower& t, SketchIndex key) const {
  // median over rows of (median over reps of log |A|), shifted by the
  // stable-distribution median.
  if (!t.med_valid) refresh_medians(t);
  long double row_vals[64];
  for (int r = 0; r < shape_.rows; ++r)
    row_vals[r] = t.log_med[static_cast<size_t>(r) * shape_.buckets +
                            t.row_hash[r].bucket(key, shape_.buckets)];
  std::nth_element(row_vals, row_vals + shape_.rows / 2, row_vals + shape_.rows);
  return row_vals[shape_.rows / 2];
}

long double RecSamplerSketch::level1_log_value(int64_t i1) const {
  return tower_log_median(tower1_, static_cast<SketchIndex>(i1));
}

long double RecSamplerSketch::level2_log_value(int l1, int64_t i1, int64_t i2) const {
  SketchIndex key = static_cast<SketchIndex>(i1) * static_cast<SketchIndex>(shape_.n2) +
                    static_cast<SketchIndex>(i2);
  return tower_log_median(tower2_[l1], key);
}

long double RecSamplerSketch::level3_log_value(int l1, int l2, int64_t i1, int64_t i2,
                                               int64_t i3) const {
  SketchIndex key = (static_cast<SketchIndex>(i1) * static_cast<SketchIndex>(shape_.n2) +
                     static_cast<SketchIndex>(i2)) *
                        static_cast<SketchIndex>(shape_.n3) +
                    static_cast<SketchIndex>(i3);
  return tower_log_median(tower3_[l1][l2], key);
}

int64_t RecSamplerSketch::recover_i1() const {
  int64_t best = 0;
  long double best_val = -1e30L;
  for (int64_t i = 0; i < shape_.n1; ++i) {
    long double v = level1_log_value(i);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  return best;
}

int64_t RecSamplerSketch::recover_i2(int l1, int64_t i1) const {
  int64_t best = 0;
  long double best_val = -1e30L;
  for (int64_t i = 0; i < shape_.n2; ++i) {
    long double v = level2_log_value(l1, i1, i);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  return best;
}

int64_t RecSamplerSketch::recover_i3(int l1, int l2, int64_t i1, int64_t i2) const {
  int64_t best = 0;
  long double best_val = -1e30L;
  for (int64_t i = 0; i < shape_.n3; ++i) {
    long double v = level3_log_value(l1, l2, i1, i2, i);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  return best;
}

double RecSamplerSketch::total_norm_estimate() const { return total_.estimate(); }

std::optional<SampleBatch> RecSamplerSketch::sample_batch() const {
  double total = total_norm_estimate();
  if (!(total > 0)) return std::nullopt;
  const long double log_total = logl(static_cast<long double>(total));
  const long double log_gamma = logl(static_cast<long double>(shape_.resolved_gamma()));
  const long double inv_p = 1.0L / static_cast<long double>(shape_.p);

  SampleBatch batch;
  batch.i1 = recover_i1();
  // Self-check: the recovered argmax must carry at least a gamma^{k/p}
  // share of the total mass at each level; failures trigger a retry with
  // fresh randomness at the caller.
  if (level1_log_value(batch.i1) < inv_p * log_gamma + log_total) return std::nullopt;

  batch.i2.resize(shape_.samples);
  batch.i3.assign(shape_.samples, std::vector<int64_t>(shape_.samples, 0));
  for (int l1 = 0; l1 < shape_.samples; ++l1) {
    batch.i2[l1] = recover_i2(l1, batch.i1);
    if (level2_log_value(l1, batch.i1, batch.i2[l1]) < 2 * inv_p * log_gamma + log_total)
      return std::nullopt;
    for (int l2 = 0; l2 < shape_.samples; ++l2) {
      batch.i3[l1][l2] = recover_i3(l1, l2, batch.i1, batch.i2[l1]);
      if (level3_log_value(l1, l2, batch.i1, batch.i2[l1], batch.i3[l1][l2]) <
          3 * inv_p * log_gamma + log_total)
        return std::nullopt;
    }
  }
  return batch;
}

}  // namespace emst
