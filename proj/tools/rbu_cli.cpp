#include <cstdint>
#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "rbu/rbu.h"

namespace {

int exit_code(rbu_status s) {
  switch (s) {
    case RBU_OK: return 0;
    case RBU_ERR_CONFIG:
    case RBU_ERR_UNKNOWN_COMMAND: return 2;
    case RBU_ERR_NUMERICAL:
    case RBU_ERR_INVALID_ARGUMENT: return 3;
    default: return 1;
  }
}

int report_failure(rbu_status s) {
  const char* where = rbu_last_error_where();
  std::fprintf(stderr, "rbu: %s\n", rbu_last_error());
  if (s == RBU_ERR_NUMERICAL && *where) std::fprintf(stderr, "rbu: failed in %s\n", where);
  return exit_code(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust utility maximization experiments"};
  app.set_version_flag("--version", std::string(rbu_version()));

  std::string command;
  std::string config;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string out;
  std::string format;
  bool quiet = false;

  app.add_option("command", command, "run | simulate | primal | dual | gap | characterize | check-conditions | muckenhoupt")
      ->required();
  app.add_option("--config,-c", config, "experiment file (YAML or JSON)")->required();
  auto* seed_opt = app.add_option("--seed", seed, "override the Monte Carlo seed");
  auto* threads_opt = app.add_option("--threads", threads, "worker threads (0 = all cores)");
  app.add_option("--out", out, "output directory");
  app.add_option("--format", format, "json | csv | both")->check(CLI::IsMember({"json", "csv", "both"}));
  app.add_flag("--quiet,-q", quiet, "no summary on stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (!rbu_is_command(command.c_str())) {
    std::fprintf(stderr, "rbu: unknown subcommand '%s'\n", command.c_str());
    return 2;
  }

  rbu_experiment* exp = nullptr;
  rbu_status s = rbu_experiment_load(config.c_str(), &exp);
  if (s != RBU_OK) return report_failure(s);
  if (*seed_opt) rbu_experiment_set_seed(exp, seed);
  if (*threads_opt) rbu_experiment_set_threads(exp, threads);
  if (!out.empty()) rbu_experiment_set_out_dir(exp, out.c_str());
  if (!format.empty())
    rbu_experiment_set_formats(exp, format == "json" ? RBU_FORMAT_JSON
                                    : format == "csv" ? RBU_FORMAT_CSV
                                                      : RBU_FORMAT_JSON | RBU_FORMAT_CSV);

  rbu_report* report = nullptr;
  s = rbu_run(exp, command.c_str(), &report);
  if (s != RBU_OK) {
    rbu_experiment_free(exp);
    return report_failure(s);
  }
  s = rbu_report_write(report, rbu_experiment_out_dir(exp), rbu_experiment_formats(exp));
  if (s == RBU_OK && !quiet) std::fputs(rbu_report_summary(report), stdout);
  rbu_report_free(report);
  rbu_experiment_free(exp);
  return s == RBU_OK ? 0 : report_failure(s);
}
