#ifndef RBU_H
#define RBU_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define RBU_API __declspec(dllexport)
#else
#define RBU_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rbu_status {
  RBU_OK = 0,
  RBU_ERR_CONFIG = 2,
  RBU_ERR_NUMERICAL = 3,
  RBU_ERR_INVALID_ARGUMENT = 4,
  RBU_ERR_UNKNOWN_COMMAND = 5,
  RBU_ERR_IO = 6,
  RBU_ERR_INTERNAL = 7
} rbu_status;

typedef struct rbu_experiment rbu_experiment;
typedef struct rbu_report rbu_report;

enum { RBU_FORMAT_JSON = 1, RBU_FORMAT_CSV = 2 };

RBU_API const char* rbu_version(void);

/* Message and module.operation of the last failure on this thread. */
RBU_API const char* rbu_last_error(void);
RBU_API const char* rbu_last_error_where(void);

RBU_API rbu_status rbu_experiment_load(const char* path, rbu_experiment** out);
/* YAML or its JSON mirror. */
RBU_API rbu_status rbu_experiment_parse(const char* text, rbu_experiment** out);
RBU_API void rbu_experiment_free(rbu_experiment* exp);

RBU_API rbu_status rbu_experiment_set_seed(rbu_experiment* exp, uint64_t seed);
RBU_API rbu_status rbu_experiment_set_threads(rbu_experiment* exp, unsigned threads);
RBU_API rbu_status rbu_experiment_set_out_dir(rbu_experiment* exp, const char* dir);
/* Bitmask of RBU_FORMAT_*. */
RBU_API rbu_status rbu_experiment_set_formats(rbu_experiment* exp, int formats);
RBU_API const char* rbu_experiment_out_dir(const rbu_experiment* exp);
RBU_API int rbu_experiment_formats(const rbu_experiment* exp);

/* Normalized configuration; the string lives as long as exp. */
RBU_API const char* rbu_experiment_to_json(rbu_experiment* exp);
RBU_API const char* rbu_experiment_to_yaml(rbu_experiment* exp);

RBU_API int rbu_is_command(const char* command);
RBU_API rbu_status rbu_run(const rbu_experiment* exp, const char* command, rbu_report** out);

RBU_API const char* rbu_report_json(const rbu_report* report);
RBU_API const char* rbu_report_summary(const rbu_report* report);
/* Numeric entry addressed by a JSON pointer, e.g. "/gap/relative_gap". */
RBU_API rbu_status rbu_report_number(const rbu_report* report, const char* pointer, double* value);
RBU_API rbu_status rbu_report_write(const rbu_report* report, const char* dir, int formats);
RBU_API void rbu_report_free(rbu_report* report);

#ifdef __cplusplus
}
#endif

#endif
