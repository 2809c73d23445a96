// Command-line front end for the emstsketch shared library. Talks to the
// core exclusively through the C API.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "emstsketch.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct CommonArgs {
  std::string input;
  std::string gen;
  std::string report_path;
  uint64_t seed = 1;
};

emst_stream_t* open_stream(const CommonArgs& args, char* errbuf, size_t errlen) {
  if (!args.input.empty()) return emst_stream_from_file(args.input.c_str(), errbuf, errlen);
  if (!args.gen.empty()) return emst_stream_generate(args.gen.c_str(), args.seed, errbuf, errlen);
  std::snprintf(errbuf, errlen, "provide --input FILE or --gen SPEC");
  return nullptr;
}

int emit_report(const emst_report_t* rep, const std::string& path) {
  const char* json = emst_report_json(rep);
  if (path.empty()) {
    std::cout << json << std::endl;
  } else {
    std::ofstream out(path);
    if (!out) {
      std::cerr << "cannot write report to " << path << "\n";
      return kExitRuntime;
    }
    out << json << std::endl;
  }
  return kExitOk;
}

int run_with_options(const CommonArgs& args, const std::string& options_json) {
  char errbuf[1024] = {0};
  emst_stream_t* stream = open_stream(args, errbuf, sizeof errbuf);
  if (!stream) {
    std::cerr << "error: " << errbuf << "\n";
    return kExitConfig;
  }
  emst_report_t* rep = emst_run(stream, options_json.c_str(), errbuf, sizeof errbuf);
  emst_stream_free(stream);
  if (!rep) {
    std::cerr << "error: " << errbuf << "\n";
    bool config = std::string(errbuf).rfind("config error", 0) == 0;
    return config ? kExitConfig : kExitRuntime;
  }
  int rc = emit_report(rep, args.report_path);
  emst_report_free(rep);
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"streaming Euclidean MST estimation toolkit"};
  app.require_subcommand(1);

  CommonArgs est_args;
  std::string mode = "exact-Z";
  double epsilon = 0.5, onepass_epsilon = 0.25, threshold = 64;
  int alpha = 2, passes = 0, samples = 8;
  bool with_oracle = false;

  auto* est = app.add_subcommand("estimate", "run an MST estimator");
  est->add_option("--mode", mode,
                  "oracle|ideal|exact-Z|sampled-Z|alpha|onepass|onepass-sketch");
  est->add_option("--input", est_args.input, "turnstile stream file");
  est->add_option("--gen", est_args.gen, "generator spec, e.g. cantor:n=64");
  est->add_option("--epsilon", epsilon, "block/level precision");
  est->add_option("--onepass-epsilon", onepass_epsilon, "one-pass precision (1/eps power of 2)");
  est->add_option("--alpha", alpha, "BFS rounds / passes");
  est->add_option("--passes", passes, "alias for --alpha");
  est->add_option("--samples", samples, "samples per level");
  est->add_option("--threshold", threshold, "size threshold");
  est->add_option("--seed", est_args.seed, "master seed");
  est->add_flag("--oracle", with_oracle, "also run the exact oracle and report the ratio");
  est->add_option("--report", est_args.report_path, "write the JSON report here");

  CommonArgs oracle_args;
  auto* orc = app.add_subcommand("oracle", "exact MST cost");
  orc->add_option("--input", oracle_args.input, "turnstile stream file");
  orc->add_option("--gen", oracle_args.gen, "generator spec");
  orc->add_option("--seed", oracle_args.seed, "generator seed");
  orc->add_option("--report", oracle_args.report_path, "write the JSON report here");

  auto* self = app.add_subcommand("selftest", "run the invariant suites");

  std::vector<double> calib_ps{1.0, 0.5, 0.05};
  auto* cal = app.add_subcommand("calibrate", "p-stable median constants");
  cal->add_option("--p", calib_ps, "p values to calibrate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints usage/message
    return e.get_exit_code() == 0 ? kExitOk : kExitConfig;
  }

  if (est->parsed()) {
    if (passes > 0) alpha = passes;
    nlohmann::json opts{{"mode", mode},
                        {"epsilon", epsilon},
                        {"onepass_epsilon", onepass_epsilon},
                        {"alpha", alpha},
                        {"samples", samples},
                        {"size_threshold", threshold},
                        {"seed", est_args.seed},
                        {"oracle", with_oracle}};
    return run_with_options(est_args, opts.dump());
  }
  if (orc->parsed()) {
    nlohmann::json opts{{"mode", "oracle"}, {"seed", oracle_args.seed}};
    return run_with_options(oracle_args, opts.dump());
  }
  if (self->parsed()) {
    std::vector<char> log(1 << 14, 0);
    emst_status rc = emst_selftest(log.data(), log.size());
    std::cout << log.data();
    return rc == EMST_OK ? kExitOk : kExitRuntime;
  }
  if (cal->parsed()) {
    char* json = emst_calibrate_json(calib_ps.data(), static_cast<int>(calib_ps.size()));
    std::cout << json << std::endl;
    emst_string_free(json);
    return kExitOk;
  }
  return kExitConfig;
}
