#pragma once

// The alpha-pass linear-sketch implementation of the sampled estimator:
// round 1 samples p ~ V_t by l0 sampling and estimates support sizes;
// round 2 recovers the balls B(p, 2^j t) through k-sparse sketches (the
// y side) and starts the BFS; later rounds expand the BFS frontier one
// hop per pass (the z side). Rounds only ever instantiate sketches from
// the outputs of earlier rounds.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "emst/components.hpp"
#include "emst/geometry.hpp"
#include "emst/quadtree.hpp"

namespace emst {

// Replayable update source; each replay() call is one pass over the data.
class StreamSource {
 public:
  virtual ~StreamSource() = default;
  virtual int64_t lambda() const = 0;
  virtual int dimension() const = 0;
  virtual void replay(const std::function<void(const StreamUpdate&)>& fn) = 0;
  virtual int replays() const = 0;
};

class MemoryStreamSource : public StreamSource {
 public:
  explicit MemoryStreamSource(PointStream stream) : stream_(std::move(stream)) {}
  int64_t lambda() const override { return stream_.lambda; }
  int dimension() const override { return stream_.dimension; }
  void replay(const std::function<void(const StreamUpdate&)>& fn) override {
    ++replays_;
    for (const auto& u : stream_.updates) fn(u);
  }
  int replays() const override { return replays_; }

 private:
  PointStream stream_;
  int replays_ = 0;
};

// Re-reads the file on every pass.
class FileStreamSource : public StreamSource {
 public:
  explicit FileStreamSource(std::string path);
  int64_t lambda() const override { return lambda_; }
  int dimension() const override { return dimension_; }
  void replay(const std::function<void(const StreamUpdate&)>& fn) override;
  int replays() const override { return replays_; }

 private:
  std::string path_;
  int64_t lambda_ = 0;
  int dimension_ = 0;
  int replays_ = 0;
};

struct AlphaPassConfig {
  QuadtreeConfig quad;
  double size_threshold = 64;
  int samples_per_level = 4;
  double eps0 = 0.1;            // support-size estimation precision
  bool use_exact_counts = false;  // test hook: bypass l0 estimation for n-hat
  int level_chunk = 48;           // levels processed per replay batch
};

struct PassSampleRecord {
  int level_index = -1;
  double t = 0;
  bool sampler_failed = false;
  bool discarded = false;       // inconsistent recovery; dropped from the mean
  bool sketch_fail_seen = false;  // some k-sparse decode returned FAIL
  Point vertex;                 // sampled p (fine units), valid unless sampler_failed
  double min_yz = 0;            // sketch-recovered min(y_t, z_t)
  double y = 0, z = 0;
};

struct AlphaPassResult {
  double estimate = 0;  // Z-hat
  int rounds_per_trial = 0;
  int replays_total = 0;
  double hat_n0 = 0;
  std::vector<double> hat_n;        // per level
  std::vector<double> level_mean;   // per level mean of min(y,z)
  std::vector<PassSampleRecord> samples;
  std::vector<std::string> warnings;
};

AlphaPassResult run_alpha_pass(const AlphaPassConfig& cfg, StreamSource& source);

}  // namespace emst
