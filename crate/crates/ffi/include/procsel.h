#ifndef PROCSEL_H
#define PROCSEL_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ProcselStatus {
  PROCSEL_STATUS_OK = 0,
  PROCSEL_STATUS_NULL_ARGUMENT = 1,
  PROCSEL_STATUS_INVALID_UTF8 = 2,
  PROCSEL_STATUS_IO = 3,
  PROCSEL_STATUS_REGISTRY = 4,
  PROCSEL_STATUS_BPMN = 5,
  PROCSEL_STATUS_CONFIG = 6,
  PROCSEL_STATUS_LEXICON = 7,
  PROCSEL_STATUS_NOT_FOUND = 8,
  PROCSEL_STATUS_INVALID_ARGUMENT = 9,
  PROCSEL_STATUS_PANIC = 10,
} ProcselStatus;

/**
 * Loaded registry, lexicon and configuration. Immutable once created, so
 * one engine may be shared between threads.
 */
typedef struct ProcselEngine ProcselEngine;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Loads a registry file and creates an engine.
 *
 * `lexicon_path` and `config_json` may be null. `config_json` uses the
 * config file format; its `registry` and `lexicon` entries are used when
 * the corresponding path argument is null.
 *
 * # Safety
 * String arguments must be null or NUL-terminated; `out` must be writable.
 */
enum ProcselStatus procsel_engine_new(const char *registry_path,
                                      const char *lexicon_path,
                                      const char *config_json,
                                      struct ProcselEngine **out);

/**
 * # Safety
 * `engine` must be null or come from [`procsel_engine_new`], and must not be
 * used afterwards.
 */
void procsel_engine_free(struct ProcselEngine *engine);

/**
 * Ranks candidates for a BPMN document. `config_json` (nullable) overrides
 * the engine's configuration for this call only. The JSON report is written
 * to `out_json`.
 *
 * # Safety
 * See [`procsel_engine_new`].
 */
enum ProcselStatus procsel_engine_select(const struct ProcselEngine *engine,
                                         const char *bpmn_xml,
                                         const char *config_json,
                                         char **out_json);

/**
 * Writes a JSON array summarizing every registered service.
 *
 * # Safety
 * See [`procsel_engine_new`].
 */
enum ProcselStatus procsel_engine_services_json(const struct ProcselEngine *engine,
                                                char **out_json);

/**
 * Writes the full record of one service as JSON.
 *
 * # Safety
 * See [`procsel_engine_new`].
 */
enum ProcselStatus procsel_engine_service_json(const struct ProcselEngine *engine,
                                               const char *service_key,
                                               char **out_json);

/**
 * Parses a BPMN document and binds its tasks. On success, writes the task
 * requirements as a JSON array to `out_json` unless it is null.
 *
 * # Safety
 * See [`procsel_engine_new`].
 */
enum ProcselStatus procsel_validate_bpmn(const char *bpmn_xml, char **out_json);

/**
 * Explains how candidate `rank` (1-based) of `task_id` was scored, given
 * a report produced by [`procsel_engine_select`].
 *
 * # Safety
 * See [`procsel_engine_new`].
 */
enum ProcselStatus procsel_explain(const char *report_json,
                                   const char *task_id,
                                   size_t rank,
                                   char **out_text);

/**
 * Message describing the last failure on this thread, or null. The pointer
 * stays valid until the next call into this library on the same thread.
 */
const char *procsel_last_error(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library, freed only once.
 */
void procsel_string_free(char *s);

/**
 * Library version as a static NUL-terminated string.
 */
const char *procsel_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PROCSEL_H */
