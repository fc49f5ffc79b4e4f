#include "rbu/rbu.h"

#include <cmath>
#include <exception>
#include <filesystem>
#include <new>
#include <string>

#include "rbu/config.hpp"
#include "rbu/error.hpp"
#include "rbu/experiment.hpp"

struct rbu_experiment {
  rbu::ExperimentConfig cfg;
  std::string json;
  std::string yaml;
};

struct rbu_report {
  rbu::RunOutput out;
  std::string json;
};

namespace {

thread_local std::string t_error;
thread_local std::string t_where;

rbu_status set_error(rbu_status code, std::string where, std::string message) {
  t_where = std::move(where);
  t_error = std::move(message);
  return code;
}

rbu_status status_of(rbu::ErrorKind kind) {
  switch (kind) {
    case rbu::ErrorKind::config: return RBU_ERR_CONFIG;
    case rbu::ErrorKind::invalid_argument: return RBU_ERR_INVALID_ARGUMENT;
    default: return RBU_ERR_NUMERICAL;
  }
}

template <class F>
rbu_status guarded(F&& body) {
  t_error.clear();
  t_where.clear();
  try {
    body();
    return RBU_OK;
  } catch (const rbu::Error& e) {
    return set_error(status_of(e.kind()), e.where(), e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return set_error(RBU_ERR_IO, "cli.io", e.what());
  } catch (const std::bad_alloc&) {
    return set_error(RBU_ERR_INTERNAL, "", "out of memory");
  } catch (const std::exception& e) {
    return set_error(RBU_ERR_INTERNAL, "", e.what());
  }
}

rbu_status null_arg(const char* what) { return set_error(RBU_ERR_INVALID_ARGUMENT, "capi", std::string(what) + " is null"); }

}  // namespace

extern "C" {

const char* rbu_version(void) { return rbu::version(); }
const char* rbu_last_error(void) { return t_error.c_str(); }
const char* rbu_last_error_where(void) { return t_where.c_str(); }

rbu_status rbu_experiment_load(const char* path, rbu_experiment** out) {
  if (!path || !out) return null_arg("argument");
  *out = nullptr;
  return guarded([&] {
    if (!std::filesystem::exists(path)) rbu::fail(rbu::ErrorKind::config, "config.file", std::string("no such file: ") + path);
    *out = new rbu_experiment{rbu::load_config(path), {}, {}};
  });
}

rbu_status rbu_experiment_parse(const char* text, rbu_experiment** out) {
  if (!text || !out) return null_arg("argument");
  *out = nullptr;
  return guarded([&] { *out = new rbu_experiment{rbu::parse_config_text(text), {}, {}}; });
}

void rbu_experiment_free(rbu_experiment* exp) { delete exp; }

rbu_status rbu_experiment_set_seed(rbu_experiment* exp, uint64_t seed) {
  if (!exp) return null_arg("experiment");
  exp->cfg.seed = seed;
  return RBU_OK;
}

rbu_status rbu_experiment_set_threads(rbu_experiment* exp, unsigned threads) {
  if (!exp) return null_arg("experiment");
  exp->cfg.threads = threads;
  return RBU_OK;
}

rbu_status rbu_experiment_set_out_dir(rbu_experiment* exp, const char* dir) {
  if (!exp || !dir) return null_arg("argument");
  if (!*dir) return set_error(RBU_ERR_INVALID_ARGUMENT, "capi", "output directory is empty");
  exp->cfg.out_dir = dir;
  return RBU_OK;
}

rbu_status rbu_experiment_set_formats(rbu_experiment* exp, int formats) {
  if (!exp) return null_arg("experiment");
  if (formats <= 0 || formats > (RBU_FORMAT_JSON | RBU_FORMAT_CSV))
    return set_error(RBU_ERR_INVALID_ARGUMENT, "capi", "formats must combine RBU_FORMAT_JSON and RBU_FORMAT_CSV");
  exp->cfg.write_json = formats & RBU_FORMAT_JSON;
  exp->cfg.write_csv = formats & RBU_FORMAT_CSV;
  return RBU_OK;
}

const char* rbu_experiment_out_dir(const rbu_experiment* exp) { return exp ? exp->cfg.out_dir.c_str() : ""; }

int rbu_experiment_formats(const rbu_experiment* exp) {
  if (!exp) return 0;
  return (exp->cfg.write_json ? RBU_FORMAT_JSON : 0) | (exp->cfg.write_csv ? RBU_FORMAT_CSV : 0);
}

const char* rbu_experiment_to_json(rbu_experiment* exp) {
  if (!exp) return "";
  exp->json = rbu::config_to_json(exp->cfg).dump(2);
  return exp->json.c_str();
}

const char* rbu_experiment_to_yaml(rbu_experiment* exp) {
  if (!exp) return "";
  exp->yaml = rbu::config_to_yaml(exp->cfg);
  return exp->yaml.c_str();
}

int rbu_is_command(const char* command) { return command && rbu::is_subcommand(command); }

rbu_status rbu_run(const rbu_experiment* exp, const char* command, rbu_report** out) {
  if (!exp || !command || !out) return null_arg("argument");
  *out = nullptr;
  if (!rbu::is_subcommand(command))
    return set_error(RBU_ERR_UNKNOWN_COMMAND, "cli", std::string("unknown subcommand '") + command + "'");
  return guarded([&] {
    auto* r = new rbu_report{rbu::run_command(exp->cfg, command), {}};
    r->json = rbu::report_text(r->out);
    *out = r;
  });
}

const char* rbu_report_json(const rbu_report* report) { return report ? report->json.c_str() : ""; }
const char* rbu_report_summary(const rbu_report* report) { return report ? report->out.summary.c_str() : ""; }

rbu_status rbu_report_number(const rbu_report* report, const char* pointer, double* value) {
  if (!report || !pointer || !value) return null_arg("argument");
  return guarded([&] {
    const nlohmann::json* v = nullptr;
    try {
      v = &report->out.report.at(nlohmann::json::json_pointer(pointer));
    } catch (const nlohmann::json::exception& e) {
      rbu::fail(rbu::ErrorKind::invalid_argument, "capi.report_number", std::string("no entry at ") + pointer);
    }
    if (v->is_number()) {
      *value = v->get<double>();
    } else if (v->is_boolean()) {
      *value = v->get<bool>() ? 1.0 : 0.0;
    } else if (*v == "inf") {
      *value = INFINITY;
    } else if (*v == "-inf") {
      *value = -INFINITY;
    } else if (*v == "nan") {
      *value = NAN;
    } else {
      rbu::fail(rbu::ErrorKind::invalid_argument, "capi.report_number", std::string("not a number at ") + pointer);
    }
  });
}

rbu_status rbu_report_write(const rbu_report* report, const char* dir, int formats) {
  if (!report || !dir) return null_arg("argument");
  rbu_status s = guarded([&] {
    rbu::write_outputs(report->out, dir, formats & RBU_FORMAT_JSON, formats & RBU_FORMAT_CSV);
  });
  return s == RBU_ERR_INVALID_ARGUMENT ? set_error(RBU_ERR_IO, t_where, t_error) : s;
}

void rbu_report_free(rbu_report* report) { delete report; }

}  // extern "C"
