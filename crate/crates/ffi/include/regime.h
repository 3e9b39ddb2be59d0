#ifndef REGIME_H
#define REGIME_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Outcome of a call. The numeric values match the exit codes of the `regime` tool.
 */
typedef enum RegimeStatus {
  REGIME_STATUS_OK = 0,
  /**
   * Transfer refused, or no strategy is identifiable.
   */
  REGIME_STATUS_REFUSED = 1,
  /**
   * Parse error, invalid model, unknown name or similar.
   */
  REGIME_STATUS_INPUT_ERROR = 2,
  /**
   * An observational conditional is undefined at a history the target regime reaches.
   */
  REGIME_STATUS_UNDEFINED = 3,
  /**
   * A proven implication between conditions failed.
   */
  REGIME_STATUS_INTERNAL = 4,
  REGIME_STATUS_NULL_ARGUMENT = 5,
  REGIME_STATUS_INVALID_UTF8 = 6,
  REGIME_STATUS_PANIC = 7,
} RegimeStatus;

/**
 * How [`regime_consequence`] computes the expected loss.
 */
typedef enum RegimeMethod {
  /**
   * Backward recursion on the regime's own kernels.
   */
  REGIME_METHOD_RECURSION = 0,
  /**
   * Sum over the full joint distribution.
   */
  REGIME_METHOD_BRUTE_FORCE = 1,
  /**
   * Observational nature kernels with the regime's actions, only if the checks pass.
   */
  REGIME_METHOD_TRANSFER = 2,
  /**
   * As `Transfer`, ignoring failed checks.
   */
  REGIME_METHOD_TRANSFER_FORCED = 3,
} RegimeMethod;

/**
 * Search space of [`regime_optimize`].
 */
typedef enum RegimeOptMode {
  REGIME_OPT_MODE_ORACLE = 0,
  REGIME_OPT_MODE_TRANSFER = 1,
} RegimeOptMode;

/**
 * Opaque influence diagram.
 */
typedef struct RegimeDiagram RegimeDiagram;

/**
 * Opaque multi-regime model.
 */
typedef struct RegimeModel RegimeModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the next call.
 */
const char *regime_last_error(void);

/**
 * Library version as a static string.
 */
const char *regime_version(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void regime_string_free(char *s);

/**
 * Parses model text.
 *
 * # Safety
 * `source` must be a nul-terminated string; `out` must be writable.
 */
enum RegimeStatus regime_model_parse(const char *source, struct RegimeModel **out);

/**
 * Loads the model of a built-in fixture such as `"appb"` or `"cts(10)"`.
 *
 * # Safety
 * `name` must be a nul-terminated string; `out` must be writable.
 */
enum RegimeStatus regime_model_fixture(const char *name, struct RegimeModel **out);

/**
 * Releases a model. Null is ignored.
 *
 * # Safety
 * `model` must come from this library and not have been freed.
 */
void regime_model_free(struct RegimeModel *model);

/**
 * Canonical text of a model.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum RegimeStatus regime_model_to_source(const struct RegimeModel *model, char **out);

/**
 * Runs one condition, or every applicable one when `condition` is null or
 * `"all"`, for `regime` (null picks the first interventional regime).
 * `holds` receives the verdict; `report_json`, if not null, the full report.
 * Returns `Internal` when a proven implication is violated.
 *
 * # Safety
 * Strings must be nul-terminated or null where allowed; `holds` must be writable.
 */
enum RegimeStatus regime_check(const struct RegimeModel *model,
                               const char *regime,
                               const char *condition,
                               bool *holds,
                               char **report_json);

/**
 * Expected loss of `regime` under the loss text (`"0=0, 1=1"` form).
 * `value` receives the exact value as `"n/d"`. A refused transfer returns
 * `Refused` and leaves `value` untouched.
 *
 * # Safety
 * Strings must be nul-terminated; `value` must be writable.
 */
enum RegimeStatus regime_consequence(const struct RegimeModel *model,
                                     const char *regime,
                                     const char *loss,
                                     enum RegimeMethod method,
                                     char **value);

/**
 * Evaluates every non-randomized strategy and writes the optimization
 * report as JSON.
 *
 * # Safety
 * Strings must be nul-terminated; `report_json` must be writable.
 */
enum RegimeStatus regime_optimize(const struct RegimeModel *model,
                                  const char *loss,
                                  enum RegimeOptMode mode,
                                  char **report_json);

/**
 * Parses diagram text.
 *
 * # Safety
 * `source` must be a nul-terminated string; `out` must be writable.
 */
enum RegimeStatus regime_diagram_parse(const char *source, struct RegimeDiagram **out);

/**
 * Releases a diagram. Null is ignored.
 *
 * # Safety
 * `diagram` must come from this library and not have been freed.
 */
void regime_diagram_free(struct RegimeDiagram *diagram);

/**
 * Whether the diagram implies a statement such as `"Y _||_ sigma | A"`.
 * When it does not and `active_path` is not null, it receives a path
 * witnessing the dependence.
 *
 * # Safety
 * `statement` must be nul-terminated; `separated` must be writable.
 */
enum RegimeStatus regime_dsep(const struct RegimeDiagram *diagram,
                              const char *statement,
                              bool *separated,
                              char **active_path);

/**
 * Verifies a built-in fixture against its documented values.
 *
 * # Safety
 * `name` must be nul-terminated; `passed` must be writable.
 */
enum RegimeStatus regime_fixture_verify(const char *name, bool *passed, char **report_json);

/**
 * Runs the `regime` command line in process. `argv[0]` is the program
 * name. Standard output and standard error are captured into `out` and
 * `err` when those are not null. Returns the exit code, or -1 if the
 * arguments are unreadable.
 *
 * # Safety
 * `argv` must hold `argc` nul-terminated strings.
 */
int32_t regime_cli_run(size_t argc, const char *const *argv, char **out, char **err);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* REGIME_H */
