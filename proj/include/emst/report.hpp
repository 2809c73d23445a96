#pragma once

// EstimateReport: the single JSON document every estimator run produces.
// Field names are frozen; tests parse them.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace emst {

struct ReportLevel {
  double t = 0;
  int vertex_count = 0;
  double value = 0;  // per-level diagnostic (component sum, mean z, ...)
  std::map<std::string, double> extra;
};

struct EstimateReport {
  std::string mode;  // exact | ideal | exact-Z | sampled-Z | alpha | onepass
  std::map<std::string, double> params;
  std::string generator_version;
  double estimate = 0;
  std::optional<double> oracle_mst;
  std::optional<double> ratio;  // estimate / oracle_mst
  uint64_t seed = 0;
  double wall_time_ms = 0;
  std::vector<ReportLevel> levels;
  std::vector<std::string> warnings;

  std::string to_json(int indent = 2) const;
  static EstimateReport from_json(const std::string& text);

  bool operator==(const EstimateReport& o) const;
};

}  // namespace emst
