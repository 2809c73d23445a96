#include "emst/runner.hpp"

#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "emst/estimators.hpp"
#include "emst/multipass.hpp"
#include "emst/onepass.hpp"
#include "emst/oracle.hpp"
#include "emst/quadtree.hpp"
#include "emst/sketch/pstable.hpp"

namespace emst {

namespace {

struct LoadedInstance {
  PointMultiset points;
  int dimension = 1;
  int64_t lambda = 1;
  std::string generator_version;
  std::optional<std::string> file_path;
};

LoadedInstance load_instance(const RunOptions& opts) {
  LoadedInstance li;
  if (!opts.input_path.empty()) {
    PointStream s = read_stream_file(opts.input_path);
    validate_stream(s);
    li.points = apply_stream(s);
    li.dimension = s.dimension;
    li.lambda = s.lambda;
    li.file_path = opts.input_path;
  } else if (!opts.generator.empty()) {
    InstanceSpec spec = InstanceSpec::parse(opts.generator);
    li.points = generate_instance(spec, opts.seed);
    li.generator_version = spec.version();
    li.dimension = li.points.empty() ? spec.dimension
                                     : static_cast<int>(li.points.support()[0].dim());
    li.lambda = 1;
    for (const auto& [p, c] : li.points.counts())
      for (auto v : p.coords) li.lambda = std::max(li.lambda, v);
  } else {
    throw std::invalid_argument("no input: provide a stream file or a generator spec");
  }
  if (li.points.empty()) throw std::invalid_argument("instance is empty");
  return li;
}

}  // namespace

EstimateReport run_estimate(const RunOptions& opts) {
  auto start = std::chrono::steady_clock::now();
  LoadedInstance li = load_instance(opts);

  EstimateReport rep;
  rep.mode = opts.mode;
  rep.seed = opts.seed;
  rep.generator_version = li.generator_version;
  rep.params["epsilon"] = opts.epsilon;
  rep.params["alpha"] = opts.alpha;
  rep.params["samples"] = opts.samples;
  rep.params["size_threshold"] = opts.size_threshold;
  rep.params["n_distinct"] = static_cast<double>(li.points.distinct_size());
  rep.params["dimension"] = li.dimension;

  auto quad_config = [&]() {
    QuadtreeConfig q;
    q.dimension = li.dimension;
    q.lambda = li.lambda;
    q.delta_bound = delta_bound_for(li.points);
    q.epsilon = opts.epsilon;
    q.alpha = opts.alpha;
    q.seed = opts.seed;
    q.validate();
    return q;
  };

  if (opts.mode == "oracle") {
    rep.estimate = static_cast<double>(mst_oracle(li.points).cost);
  } else if (opts.mode == "ideal" || opts.mode == "exact-Z" || opts.mode == "sampled-Z") {
    QuadtreeConfig q = quad_config();
    LevelStructure structure = build_levels(q);
    ShiftedGrids grids(q, structure);
    auto per_block = all_vertex_sets(q, grids, structure, li.points);
    EstimatorParams params = EstimatorParams::from(q, structure, opts.size_threshold);
    EstimateValue val;
    if (opts.mode == "ideal") {
      val = ideal_estimator(q, structure, per_block, li.points);
    } else if (opts.mode == "exact-Z") {
      val = estimator_Z(q, structure, per_block, li.points, params);
    } else {
      SampledEstimatorOptions so;
      so.samples_per_level = opts.samples;
      so.seed = opts.seed;
      val = sampled_estimator(q, structure, per_block, li.points, params, so);
    }
    rep.estimate = val.value;
    rep.warnings = val.warnings;
    for (const auto& l : val.levels)
      rep.levels.push_back({l.t, l.vertex_count, l.min_sum, {}});
  } else if (opts.mode == "alpha") {
    AlphaPassConfig ac;
    ac.quad = quad_config();
    ac.size_threshold = opts.size_threshold;
    ac.samples_per_level = opts.samples;
    AlphaPassResult r;
    if (li.file_path) {
      FileStreamSource src(*li.file_path);
      r = run_alpha_pass(ac, src);
    } else {
      MemoryStreamSource src(to_insert_stream(li.points, li.lambda, li.dimension));
      r = run_alpha_pass(ac, src);
    }
    rep.estimate = r.estimate;
    rep.warnings = r.warnings;
    rep.params["rounds_per_trial"] = r.rounds_per_trial;
    rep.params["replays_total"] = r.replays_total;
    rep.params["hat_n0"] = r.hat_n0;
    for (size_t i = 0; i < r.level_mean.size(); ++i) {
      ReportLevel lv;
      lv.t = 0;
      lv.vertex_count = static_cast<int>(r.hat_n[i]);
      lv.value = r.level_mean[i];
      rep.levels.push_back(lv);
    }
  } else if (opts.mode == "onepass" || opts.mode == "onepass-sketch") {
    OnePassConfig oc;
    oc.epsilon = opts.onepass_epsilon;
    oc.size_threshold = opts.size_threshold;
    oc.samples_per_level = opts.samples;
    oc.seed = opts.seed;
    oc.sketch_mode = (opts.mode == "onepass-sketch");
    oc.sketch_diameter = oc.sketch_mode;
    OnePassResult r = run_onepass(oc, li.points);
    rep.estimate = r.estimate;
    rep.warnings = r.warnings;
    rep.params["scale_applied"] = static_cast<double>(r.scale_applied);
    rep.params["delta_bound"] = static_cast<double>(r.delta_bound);
    rep.params["survive_prob"] = r.survive_prob;
    for (const auto& lv : r.levels) {
      ReportLevel out;
      out.t = lv.t;
      out.vertex_count = lv.vertex_count;
      out.value = lv.mean_z;
      out.extra["hat_v"] = lv.hat_v;
      out.extra["samples_ok"] = lv.samples_ok;
      out.extra["iterations"] = static_cast<double>(lv.stats.iterations);
      out.extra["returned"] = static_cast<double>(lv.stats.returned);
      out.extra["sampled_survived"] = static_cast<double>(lv.stats.sampled_survived);
      rep.levels.push_back(out);
    }
  } else {
    throw std::invalid_argument("unknown mode: " + opts.mode);
  }

  if (opts.with_oracle || opts.mode == "oracle") {
    double mst = static_cast<double>(mst_oracle(li.points).cost);
    rep.oracle_mst = mst;
    if (mst > 0) rep.ratio = rep.estimate / mst;
  }

  auto end = std::chrono::steady_clock::now();
  rep.wall_time_ms = std::chrono::duration<double, std::milli>(end - start).count();
  return rep;
}

std::string calibrate_json(const std::vector<double>& ps) {
  std::ostringstream os;
  os << "{";
  for (size_t i = 0; i < ps.size(); ++i) {
    if (i) os << ",";
    os << "\"" << ps[i] << "\": " << p_stable_abs_median(ps[i]);
  }
  os << "}";
  return os.str();
}

}  // namespace emst
