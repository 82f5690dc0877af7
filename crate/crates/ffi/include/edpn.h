#ifndef EDPN_H
#define EDPN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum EdpnFormat {
  /*
   Graphviz DOT.
   */
  EDPN_FORMAT_DOT = 0,
  /*
   Sectioned relational rows.
   */
  EDPN_FORMAT_RELATIONAL = 1,
  /*
   Line-oriented model text.
   */
  EDPN_FORMAT_MODEL = 2,
} EdpnFormat;

typedef enum EdpnMetric {
  EDPN_METRIC_CT = 0,
  EDPN_METRIC_CP = 1,
  EDPN_METRIC_CIE = 2,
  EDPN_METRIC_COE = 3,
  EDPN_METRIC_CCONTEXT = 4,
} EdpnMetric;

typedef enum EdpnPolicy {
  EDPN_POLICY_LEXICOGRAPHIC = 0,
  EDPN_POLICY_ERROR_ON_CONFLICT = 1,
} EdpnPolicy;

/*
 Outcome of a call. Values 0 to 5 coincide with the command-line exit
 codes.
 */
typedef enum EdpnStatus {
  EDPN_STATUS_OK = 0,
  /*
   Malformed input, ill-formed net, bad argument or null pointer.
   */
  EDPN_STATUS_INVALID = 1,
  /*
   Unknown fixture or unreadable resource.
   */
  EDPN_STATUS_IO = 2,
  /*
   The simulation step budget ran out.
   */
  EDPN_STATUS_BUDGET = 3,
  /*
   A conflict under the error-on-conflict policy.
   */
  EDPN_STATUS_CONFLICT = 4,
  /*
   Two nets disagree on a shared element.
   */
  EDPN_STATUS_COMPOSITION = 5,
  /*
   A bug inside the library; the message describes the panic.
   */
  EDPN_STATUS_INTERNAL = 6,
} EdpnStatus;

/*
 Opaque net handle.
 */
typedef struct EdpnNet EdpnNet;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Parses model text or relational text into a new handle. The net is not
 validated; see `edpn_net_validate`.

 # Safety
 `source` must be a nul-terminated string and `out` a writable pointer.
 */
enum EdpnStatus edpn_net_parse(const char *source, struct EdpnNet **out);

/*
 Loads a bundled fixture by name, such as `gdc-basic`.

 # Safety
 `name` must be a nul-terminated string and `out` a writable pointer.
 */
enum EdpnStatus edpn_net_fixture(const char *name, struct EdpnNet **out);

/*
 Releases a handle. Null is ignored.

 # Safety
 `net` must come from this library and not be used afterwards.
 */
void edpn_net_free(struct EdpnNet *net);

/*
 Writes every violation, one per line, to `report`. Returns `Invalid`
 when any of them is an error rather than a warning.

 # Safety
 `net` must be a live handle and `report` a writable pointer.
 */
enum EdpnStatus edpn_net_validate(const struct EdpnNet *net, char **report);

/*
 Runs the net from its initial marking with one input event per tick.
 `events_csv` is a comma-separated list of input event ids (may be empty
 or null); `step_budget` of 0 selects the default budget. The trace is
 written to `trace`, also when the budget runs out.

 # Safety
 `net` must be a live handle, `events_csv` null or nul-terminated, and
 `trace` a writable pointer.
 */
enum EdpnStatus edpn_net_simulate(const struct EdpnNet *net,
                                  const char *events_csv,
                                  enum EdpnPolicy policy,
                                  size_t step_budget,
                                  char **trace);

/*
 Renders a well-formed net in the requested format.

 # Safety
 `net` must be a live handle and `out` a writable pointer.
 */
enum EdpnStatus edpn_net_export(const struct EdpnNet *net, enum EdpnFormat format, char **out);

/*
 Relational union of two well-formed nets, as a new handle.

 # Safety
 `a` and `b` must be live handles and `out` a writable pointer.
 */
enum EdpnStatus edpn_compose(const struct EdpnNet *a,
                             const struct EdpnNet *b,
                             struct EdpnNet **out);

/*
 Generates a test suite for `metric` from the initial marking with paths
 of at most `max_firings` firings, written as test-case rows. Partial
 coverage is not an error; measure the rows to see what is missing.

 # Safety
 `net` must be a live handle and `rows` a writable pointer.
 */
enum EdpnStatus edpn_net_generate_tests(const struct EdpnNet *net,
                                        enum EdpnMetric metric,
                                        size_t max_firings,
                                        char **rows);

/*
 Measures all five coverage metrics of the test-case rows in `tests`.

 # Safety
 `net` must be a live handle, `tests` nul-terminated and `report` a
 writable pointer.
 */
enum EdpnStatus edpn_net_coverage(const struct EdpnNet *net, const char *tests, char **report);

/*
 Message of the last failed call on this thread, or an empty string
 after a successful one. Valid until the next call on the same thread;
 do not free it.
 */
const char *edpn_last_error(void);

/*
 Releases a string returned by this library. Null is ignored.

 # Safety
 `s` must come from this library and not be used afterwards.
 */
void edpn_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EDPN_H */
