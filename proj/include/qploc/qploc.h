#ifndef QPLOC_H
#define QPLOC_H

#include <stddef.h>
#include <stdint.h>

#if defined(QPLOC_BUILDING)
#define QPLOC_API __attribute__((visibility("default")))
#else
#define QPLOC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef struct qploc_config qploc_config;
typedef struct qploc_report qploc_report;

typedef enum {
    QPLOC_OK = 0,
    QPLOC_E_INVALID_ARGUMENT = 1,
    QPLOC_E_NEAR_SINGULAR = 2,
    QPLOC_E_CAP_EXCEEDED = 3,
    QPLOC_E_BOUNDARY_LEAK = 4,
    QPLOC_E_STEP_TOO_LARGE = 5,
    QPLOC_E_CONFIG = 6,
    QPLOC_E_IO = 7,
    QPLOC_E_REPLAY = 8,
    QPLOC_E_INTERNAL = 99
} qploc_status;

QPLOC_API const char* qploc_version(void);
/* message of the last failed call on this thread, "" if none */
QPLOC_API const char* qploc_last_error(void);

/* kind: msa, wegner, exclusion, dynamics, localization or identities */
QPLOC_API qploc_status qploc_config_default(const char* kind, qploc_config** out);
/* TOML, or JSON when the path ends in .json. default_kind fills a missing
   "kind" field; NULL makes the field mandatory. */
QPLOC_API qploc_status qploc_config_load(const char* path, const char* default_kind, qploc_config** out);
QPLOC_API qploc_status qploc_config_parse(const char* text, const char* format, const char* default_kind,
                                          qploc_config** out);
QPLOC_API void qploc_config_free(qploc_config* cfg);

QPLOC_API qploc_status qploc_config_set_seed(qploc_config* cfg, uint64_t seed);
QPLOC_API qploc_status qploc_config_set_workers(qploc_config* cfg, int workers);
QPLOC_API qploc_status qploc_config_set_out(qploc_config* cfg, const char* dir);

/* returned strings live as long as the handle */
QPLOC_API const char* qploc_config_kind(const qploc_config* cfg);
QPLOC_API const char* qploc_config_hash(const qploc_config* cfg);
QPLOC_API const char* qploc_config_json(const qploc_config* cfg);

/* Runs the experiment and writes its artifacts. A run whose hard invariants
   fail still returns QPLOC_OK; check qploc_report_passed. */
QPLOC_API qploc_status qploc_run(const qploc_config* cfg, qploc_report** out);
/* workers <= 0 keeps the recorded worker count */
QPLOC_API qploc_status qploc_replay(const char* dir, int workers, qploc_report** out);

QPLOC_API int qploc_report_passed(const qploc_report* rep);
QPLOC_API int qploc_report_hard_failures(const qploc_report* rep);
QPLOC_API const char* qploc_report_json(const qploc_report* rep);
QPLOC_API void qploc_report_free(qploc_report* rep);

#ifdef __cplusplus
}
#endif

#endif
