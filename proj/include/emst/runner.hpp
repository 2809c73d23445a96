#pragma once

// Orchestration shared by the C API, the CLI, and integration tests: load
// or generate an instance, run the requested estimator, emit a report.

#include <optional>
#include <string>

#include "emst/geometry.hpp"
#include "emst/report.hpp"

namespace emst {

struct RunOptions {
  std::string mode = "exact-Z";  // oracle | ideal | exact-Z | sampled-Z | alpha | onepass | onepass-sketch
  std::string input_path;       // stream file; generator used when empty
  std::string generator;        // e.g. "cantor:n=64" (see InstanceSpec)
  double epsilon = 0.5;
  double onepass_epsilon = 0.25;
  int alpha = 2;
  int samples = 8;
  double size_threshold = 64;
  uint64_t seed = 1;
  bool with_oracle = false;
};

EstimateReport run_estimate(const RunOptions& opts);

// Quick invariant suites; returns true when everything passes and appends
// one line per suite to `log`.
bool run_selftest(std::string& log);

// Monte Carlo p-stable median constants, as a JSON object {p: median}.
std::string calibrate_json(const std::vector<double>& ps);

}  // namespace emst
