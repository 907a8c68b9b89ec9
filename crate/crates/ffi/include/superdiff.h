#ifndef SUPERDIFF_H
#define SUPERDIFF_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SdField {
  SD_FIELD_TIMES = 0,
  SD_FIELD_MEAN = 1,
  SD_FIELD_STDERR = 2,
  SD_FIELD_LOCAL_EXPONENT = 3,
  SD_FIELD_RUNNING_EXPONENT = 4,
} SdField;

typedef enum SdLabel {
  SD_LABEL_BALLISTIC = 0,
  SD_LABEL_SUPERDIFFUSIVE = 1,
  SD_LABEL_DIFFUSIVE = 2,
  SD_LABEL_INTERMEDIATE = 3,
} SdLabel;

typedef enum SdStatus {
  SD_STATUS_OK = 0,
  SD_STATUS_NULL_POINTER = 1,
  /**
   * Bad config, argument or lattice; same code as the CLI exit status.
   */
  SD_STATUS_INVALID_ARGUMENT = 2,
  SD_STATUS_RESOURCE_LIMIT = 3,
  SD_STATUS_NUMERIC = 4,
  SD_STATUS_IO = 5,
  SD_STATUS_BUFFER_TOO_SMALL = 6,
  SD_STATUS_PANIC = 7,
} SdStatus;

/**
 * Parsed and validated experiment config.
 */
typedef struct SdConfig SdConfig;

/**
 * Result of one simulation: correlator series and exponent analysis.
 */
typedef struct SdSimulation SdSimulation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until
 * the next failing call on the same thread.
 */
const char *sd_last_error_message(void);

/**
 * Library version as a static nul-terminated string.
 */
const char *sd_version(void);

/**
 * Parses a JSON config; `"{}"` gives all defaults.
 *
 * # Safety
 * `json` must be a nul-terminated string and `out` a writable pointer.
 */
enum SdStatus sd_config_from_json(const char *json, struct SdConfig **out);

/**
 * # Safety
 * `cfg` must come from [`sd_config_from_json`] and not be used again.
 */
void sd_config_free(struct SdConfig *cfg);

/**
 * Runs the configured folded-chain simulation.
 *
 * # Safety
 * `cfg` must be a live config handle and `out` a writable pointer.
 */
enum SdStatus sd_simulate(const struct SdConfig *cfg, struct SdSimulation **out);

/**
 * # Safety
 * `sim` must come from [`sd_simulate`] and not be used again.
 */
void sd_simulation_free(struct SdSimulation *sim);

/**
 * Number of values in `field`. Correlator fields have `steps + 1`
 * entries; exponent fields have `steps - 1`, one per slope between
 * consecutive positive times.
 *
 * # Safety
 * `sim` must be a live handle and `len` a writable pointer.
 */
enum SdStatus sd_simulation_len(const struct SdSimulation *sim, enum SdField field, size_t *len);

/**
 * Copies `field` into `buf`, which must hold at least its length.
 *
 * # Safety
 * `buf` must be writable for `cap` doubles.
 */
enum SdStatus sd_simulation_copy(const struct SdSimulation *sim,
                                 enum SdField field,
                                 double *buf,
                                 size_t cap);

/**
 * Window-mean running exponent and its transport label.
 *
 * # Safety
 * `sim` must be a live handle; `exponent` and `label` writable pointers.
 */
enum SdStatus sd_simulation_class(const struct SdSimulation *sim,
                                  double *exponent,
                                  enum SdLabel *label);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* SUPERDIFF_H */
