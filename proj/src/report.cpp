#include "emst/report.hpp"

#include <json.hpp>

namespace emst {

using nlohmann::json;

namespace {

json level_to_json(const ReportLevel& l) {
  json j{{"t", l.t}, {"vertex_count", l.vertex_count}, {"value", l.value}};
  if (!l.extra.empty()) j["extra"] = l.extra;
  return j;
}

ReportLevel level_from_json(const json& j) {
  ReportLevel l;
  l.t = j.at("t").get<double>();
  l.vertex_count = j.at("vertex_count").get<int>();
  l.value = j.at("value").get<double>();
  if (j.contains("extra")) l.extra = j.at("extra").get<std::map<std::string, double>>();
  return l;
}

}  // namespace

std::string EstimateReport::to_json(int indent) const {
  json j;
  j["mode"] = mode;
  j["params"] = params;
  if (!generator_version.empty()) j["generator_version"] = generator_version;
  j["estimate"] = estimate;
  if (oracle_mst) j["oracle_mst"] = *oracle_mst;
  if (ratio) j["ratio"] = *ratio;
  j["seed"] = seed;
  j["wall_time_ms"] = wall_time_ms;
  j["levels"] = json::array();
  for (const auto& l : levels) j["levels"].push_back(level_to_json(l));
  j["warnings"] = warnings;
  return j.dump(indent);
}

EstimateReport EstimateReport::from_json(const std::string& text) {
  json j = json::parse(text);
  EstimateReport r;
  r.mode = j.at("mode").get<std::string>();
  r.params = j.at("params").get<std::map<std::string, double>>();
  if (j.contains("generator_version")) r.generator_version = j["generator_version"];
  r.estimate = j.at("estimate").get<double>();
  if (j.contains("oracle_mst")) r.oracle_mst = j["oracle_mst"].get<double>();
  if (j.contains("ratio")) r.ratio = j["ratio"].get<double>();
  r.seed = j.at("seed").get<uint64_t>();
  r.wall_time_ms = j.at("wall_time_ms").get<double>();
  for (const auto& l : j.at("levels")) r.levels.push_back(level_from_json(l));
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  return r;
}

bool EstimateReport::operator==(const EstimateReport& o) const {
  auto levels_eq = [&] {
    if (levels.size() != o.levels.size()) return false;
    for (size_t i = 0; i < levels.size(); ++i) {
      const auto& a = levels[i];
      const auto& b = o.levels[i];
      if (a.t != b.t || a.vertex_count != b.vertex_count || a.value != b.value ||
          a.extra != b.extra)
        return false;
    }
    return true;
  };
  return mode == o.mode && params == o.params && generator_version == o.generator_version &&
         estimate == o.estimate && oracle_mst == o.oracle_mst && ratio == o.ratio &&
         seed == o.seed && wall_time_ms == o.wall_time_ms && warnings == o.warnings &&
         levels_eq();
}

}  // namespace emst
