/* C interface to the palisade defense engine. All stage calls are synchronous, thread-safe for a shared engine, and pass structured data as JSON strings. Strings returned through out-parameters are heap-allocated and must be released with palisade_string_free. */

#ifndef PALISADE_H
#define PALISADE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of any interface call. Out-parameters are valid only when the
// call returned `PALISADE_STATUS_OK`.
typedef enum PalisadeStatus {
  // The call succeeded and all out-parameters are set.
  PALISADE_STATUS_OK = 0,
  // A required pointer argument was null.
  PALISADE_STATUS_NULL_ARG = 1,
  // A string argument was not valid UTF-8.
  PALISADE_STATUS_INVALID_UTF8 = 2,
  // A configuration document failed to parse or validate.
  PALISADE_STATUS_INVALID_CONFIG = 3,
  // A data argument (goal, plan) failed to parse.
  PALISADE_STATUS_INVALID_INPUT = 4,
  // An unexpected internal failure; the out-parameters are untouched.
  PALISADE_STATUS_INTERNAL = 5,
} PalisadeStatus;

// Opaque handle to a configured engine. Safe to share across threads;
// all stage calls on it are read-only.
typedef struct PalisadeEngine PalisadeEngine;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Create an engine.
//
// `sentinel_config_json` configures the visual scan (thresholds, exemption
// classes, phrase list); `policy_json` is the origin policy consulted by
// the guard stage. Either may be null to use the built-in defaults. On
// success `*out_engine` owns the new engine; release it with
// `palisade_engine_free`.
//
// # Safety
// String arguments must be null or valid NUL-terminated strings, and
// `out_engine` must be a valid, writable pointer.
enum PalisadeStatus palisade_engine_new(const char *sentinel_config_json,
                                        const char *policy_json,
                                        struct PalisadeEngine **out_engine);

// Release an engine created by `palisade_engine_new`. Null is a no-op.
//
// # Safety
// `engine` must be null or a pointer obtained from `palisade_engine_new`
// that has not already been freed, with no other thread still using it.
void palisade_engine_free(struct PalisadeEngine *engine);

// Run the visual scan stage on an HTML document.
//
// Writes the scan verdict as JSON to `*out_verdict_json`: whether the page
// is blocked, the visibility findings, and — only when the page is safe —
// the sanitized text payload that may be forwarded to planning.
//
// # Safety
// `engine` must be a live engine, `html` a valid NUL-terminated string,
// and `out_verdict_json` a valid, writable pointer.
enum PalisadeStatus palisade_scan_page(const struct PalisadeEngine *engine,
                                       const char *html,
                                       char **out_verdict_json);

// Run the planning stage on an already-scanned text payload.
//
// `goal_json` is the user goal as JSON (`{"instruction": ...,
// "task_domain": ...}`); `payload_text` is the sanitized page text from a
// safe scan verdict. Writes the planner verdict as JSON: either a
// rejection with its threat assessment or a drafted plan. The
// `simulated_latency_ms` field is always 0 over this interface. A goal
// whose instruction the built-in backend has no drafting template for is
// reported as invalid input.
//
// # Safety
// `engine` must be a live engine, string arguments valid NUL-terminated
// strings, and `out_verdict_json` a valid, writable pointer.
enum PalisadeStatus palisade_plan_stage(const struct PalisadeEngine *engine,
                                        const char *goal_json,
                                        const char *payload_text,
                                        char **out_verdict_json);

// Run the origin-guard stage on a drafted plan.
//
// `plan_json` is a plan as produced by the planning stage (its declared
// scope is part of the document); `task_domain` is the origin the user's
// task is anchored to, e.g. `https://jira.example`. Writes the guard
// decision as JSON. The guard is deterministic and total: any plan it
// cannot prove in-policy is blocked.
//
// # Safety
// `engine` must be a live engine, string arguments valid NUL-terminated
// strings, and `out_decision_json` a valid, writable pointer.
enum PalisadeStatus palisade_guard_check(const struct PalisadeEngine *engine,
                                         const char *plan_json,
                                         const char *task_domain,
                                         char **out_decision_json);

// Run a page through all three stages: visual scan, planning screen,
// origin guard.
//
// Writes a JSON decision document to `*out_decision_json` with
// `blocked_at` (`"L1"`, `"L2"`, `"L3"`, or null), the per-stage verdicts
// that were reached, and — only when all stages passed — the approved
// plan. A page blocked by the scan never reaches planning, so nothing of
// its content appears in the decision beyond the visibility findings.
//
// # Safety
// `engine` must be a live engine, string arguments valid NUL-terminated
// strings, and `out_decision_json` a valid, writable pointer.
enum PalisadeStatus palisade_pipeline_run(const struct PalisadeEngine *engine,
                                          const char *goal_json,
                                          const char *html,
                                          char **out_decision_json);

// Release a string returned through any out-parameter. Null is a no-op.
//
// # Safety
// `s` must be null or a string obtained from this library that has not
// already been freed.
void palisade_string_free(char *s);

// The library version as a static string. Do not free.
const char *palisade_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PALISADE_H */
