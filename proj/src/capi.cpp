#include "emstsketch.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include <json.hpp>

#include "emst/geometry.hpp"
#include "emst/oracle.hpp"
#include "emst/report.hpp"
#include "emst/runner.hpp"

struct emst_stream_t {
  emst::PointMultiset points;
  int dimension = 1;
  long long lambda = 1;
  std::string file_path;   // set when loaded from disk (alpha mode replays it)
  std::string generator;   // set when generated
  uint64_t seed = 1;
};

struct emst_report_t {
  emst::EstimateReport report;
  std::string json;
};

namespace {

void put_error(char* errbuf, size_t errlen, const std::string& msg) {
  if (!errbuf || errlen == 0) return;
  std::snprintf(errbuf, errlen, "%s", msg.c_str());
}

}  // namespace

extern "C" {

const char* emst_version(void) { return "emstsketch 0.1.0"; }

emst_stream_t* emst_stream_from_file(const char* path, char* errbuf, size_t errlen) {
  try {
    auto s = emst::read_stream_file(path);
    emst::validate_stream(s);
    auto* out = new emst_stream_t;
    out->points = emst::apply_stream(s);
    out->dimension = s.dimension;
    out->lambda = s.lambda;
    out->file_path = path;
    return out;
  } catch (const std::exception& e) {
    put_error(errbuf, errlen, e.what());
    return nullptr;
  }
}

emst_stream_t* emst_stream_generate(const char* spec, uint64_t seed, char* errbuf,
                                    size_t errlen) {
  try {
    auto parsed = emst::InstanceSpec::parse(spec);
    auto* out = new emst_stream_t;
    out->points = emst::generate_instance(parsed, seed);
    out->generator = spec;
    out->seed = seed;
    out->dimension = out->points.empty()
                         ? parsed.dimension
                         : static_cast<int>(out->points.support()[0].dim());
    out->lambda = 1;
    for (const auto& [p, c] : out->points.counts())
      for (auto v : p.coords) out->lambda = std::max<long long>(out->lambda, v);
    return out;
  } catch (const std::exception& e) {
    put_error(errbuf, errlen, e.what());
    return nullptr;
  }
}

void emst_stream_free(emst_stream_t* stream) { delete stream; }

int emst_stream_dimension(const emst_stream_t* stream) { return stream ? stream->dimension : 0; }

long long emst_stream_lambda(const emst_stream_t* stream) { return stream ? stream->lambda : 0; }

long long emst_stream_distinct_points(const emst_stream_t* stream) {
  return stream ? static_cast<long long>(stream->points.distinct_size()) : 0;
}

emst_report_t* emst_run(const emst_stream_t* stream, const char* options_json, char* errbuf,
                        size_t errlen) {
  if (!stream) {
    put_error(errbuf, errlen, "null stream");
    return nullptr;
  }
  emst::RunOptions opts;
  try {
    auto j = nlohmann::json::parse(options_json ? options_json : "{}");
    opts.mode = j.value("mode", std::string("exact-Z"));
    opts.epsilon = j.value("epsilon", 0.5);
    opts.onepass_epsilon = j.value("onepass_epsilon", 0.25);
    opts.alpha = j.value("alpha", 2);
    opts.samples = j.value("samples", 8);
    opts.size_threshold = j.value("size_threshold", 64.0);
    opts.seed = j.value("seed", stream->seed);
    opts.with_oracle = j.value("oracle", false);
    opts.input_path = stream->file_path;
    opts.generator = stream->generator;
    if (opts.input_path.empty() && opts.generator.empty())
      throw std::invalid_argument("stream handle carries no source");
  } catch (const std::exception& e) {
    put_error(errbuf, errlen, std::string("config error: ") + e.what());
    return nullptr;
  }
  try {
    auto* out = new emst_report_t;
    out->report = emst::run_estimate(opts);
    out->json = out->report.to_json();
    return out;
  } catch (const std::invalid_argument& e) {
    put_error(errbuf, errlen, std::string("config error: ") + e.what());
    return nullptr;
  } catch (const std::exception& e) {
    put_error(errbuf, errlen, std::string("runtime error: ") + e.what());
    return nullptr;
  }
}

void emst_report_free(emst_report_t* report) { delete report; }

const char* emst_report_json(const emst_report_t* report) {
  return report ? report->json.c_str() : "";
}

double emst_report_estimate(const emst_report_t* report) {
  return report ? report->report.estimate : 0.0;
}

emst_status emst_selftest(char* logbuf, size_t loglen) {
  std::string log;
  bool ok = emst::run_selftest(log);
  put_error(logbuf, loglen, log);
  return ok ? EMST_OK : EMST_ERR_RUNTIME;
}

char* emst_calibrate_json(const double* ps, int count) {
  std::vector<double> v(ps, ps + count);
  std::string s = emst::calibrate_json(v);
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void emst_string_free(char* s) { std::free(s); }

}  // extern "C"
