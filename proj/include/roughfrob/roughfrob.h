/* SPDX-License-Identifier: Apache-2.0 */
#ifndef ROUGHFROB_H
#define ROUGHFROB_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(ROUGHFROB_BUILDING)
#define RF_API __attribute__((visibility("default")))
#else
#define RF_API
#endif

/* Status codes. RF_CHECK_FAILED, RF_NONCONVERGENCE and RF_CONFIG match the CLI exit codes. */
typedef enum {
  RF_OK = 0,
  RF_CHECK_FAILED = 2,
  RF_NONCONVERGENCE = 3,
  RF_CONFIG = 4,
  RF_INVALID_ARGUMENT = 5
} rf_status;

typedef struct rf_field rf_field;

/* Signal from a JSON spec or CLI shorthand, e.g. "poly:t2" or {"kind":"weierstrass_1d","beta":0.8}. */
RF_API rf_status rf_field_create(const char* spec, rf_field** out);
/* Grid-field CSV file. */
RF_API rf_status rf_field_load(const char* path, double exponent, rf_field** out);
RF_API void rf_field_destroy(rf_field* f);
RF_API int rf_field_dim(const rf_field* f);
/* Number of values per point (rows * cols). */
RF_API int rf_field_size(const rf_field* f);
/* point has dim entries, out receives rows*cols values (column-major). */
RF_API rf_status rf_field_eval(const rf_field* f, const double* point, double* out);
RF_API rf_status rf_field_write(const rf_field* f, int level, const char* path);

/* Young integral of scalar 1D fields over [a, b]; error may be NULL. */
RF_API rf_status rf_young_integral_1d(const rf_field* f, const rf_field* g, double a, double b, int max_level,
                                      double* value, double* error);

/* Runs a CLI subcommand with a JSON config. *json_out (free with rf_string_free) receives the
   result or the error record. Returns the matching exit code. When the config has "out_dir"
   (and optionally "out_stem"), grid fields and tables are written there as CSV files. */
RF_API rf_status rf_run(const char* command, const char* config_json, char** json_out);
/* Same, config in the line-oriented key = value format. */
RF_API rf_status rf_run_config_text(const char* command, const char* config_text, char** json_out);

/* Converts key = value config text to JSON (free with rf_string_free). */
RF_API rf_status rf_parse_config(const char* config_text, char** json_out);

/* Message of the last failure on this thread; empty when none. */
RF_API const char* rf_last_error(void);
RF_API void rf_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif
