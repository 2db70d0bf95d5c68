#ifndef VSCHED_H
#define VSCHED_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

// Result code of every fallible call.
typedef enum VschedStatus {
  VSCHED_STATUS_OK = 0,
  // A required pointer argument was NULL.
  VSCHED_STATUS_NULL_ARGUMENT = 1,
  // A string argument was not valid UTF-8.
  VSCHED_STATUS_INVALID_UTF8 = 2,
  // Intent JSON failed validation.
  VSCHED_STATUS_INVALID_INTENT = 3,
  // No intent could be extracted, or its date/time could not be resolved.
  VSCHED_STATUS_UNRESOLVABLE = 4,
  // Malformed instant, timezone, range or JSON argument.
  VSCHED_STATUS_INVALID_ARGUMENT = 5,
  // The calendar store could not be read or written.
  VSCHED_STATUS_STORE = 6,
  // Gateway configuration was rejected.
  VSCHED_STATUS_CONFIG = 7,
  // An internal panic was caught at the boundary.
  VSCHED_STATUS_PANIC = 8,
} VschedStatus;

// Text pipeline handle with its own async runtime.
typedef struct VschedGateway VschedGateway;

// Local calendar store handle.
typedef struct VschedStore VschedStore;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string. Do not free.
const char *vsched_version(void);

// Message describing the last failed call on this thread, or NULL.
// Valid until the next vsched call on the same thread. Do not free.
const char *vsched_last_error_message(void);

// Releases a string returned through an `out` parameter. NULL is a no-op.
//
// # Safety
// `s` must be NULL or a string obtained from this library, freed once.
void vsched_string_free(char *s);

// Validates intent JSON and writes its canonical form to `out_json`.
//
// # Safety
// `intent_json` must be a NUL-terminated string; `out_json` must be writable.
enum VschedStatus vsched_validate_intent(const char *intent_json, char **out_json);

// Finds the earliest trigger keyword. Writes `{"keyword","span":[start,end]}`
// (byte offsets) or `null`. `keywords_json` is a JSON array of strings, or
// NULL for the defaults.
//
// # Safety
// String arguments must be NULL-or-NUL-terminated as documented; `out_json` writable.
enum VschedStatus vsched_detect_trigger(const char *text,
                                        const char *keywords_json,
                                        char **out_json);

// Runs the rule-based extractor; writes the intent JSON.
//
// # Safety
// `transcript` must be a NUL-terminated string; `out_json` writable.
enum VschedStatus vsched_extract_fallback(const char *transcript, char **out_json);

// Resolves an intent against `now` (RFC 3339) in IANA zone `tz`. Writes
// `{"title","start","end","duration_minutes"}`.
//
// # Safety
// String arguments must be NUL-terminated; `out_json` writable.
enum VschedStatus vsched_resolve_event(const char *intent_json,
                                       const char *now,
                                       const char *tz,
                                       char **out_json);

// Opens (or starts) a store file.
//
// # Safety
// `path` must be NUL-terminated; `out_store` writable.
enum VschedStatus vsched_store_open(const char *path, struct VschedStore **out_store);

// Releases a store handle. NULL is a no-op.
//
// # Safety
// `store` must be NULL or a handle from [`vsched_store_open`], freed once.
void vsched_store_free(struct VschedStore *store);

// Number of records in the store.
//
// # Safety
// `store` must be a live handle; `out_len` writable.
enum VschedStatus vsched_store_len(const struct VschedStore *store, size_t *out_len);

// Resolves the intent and commits it. Writes the stored record JSON.
//
// # Safety
// `store` must be a live handle; strings NUL-terminated; `out_json` writable.
enum VschedStatus vsched_store_create_event(const struct VschedStore *store,
                                            const char *intent_json,
                                            const char *now,
                                            const char *tz,
                                            char **out_json);

// Records intersecting `[start, end)`, as a JSON array sorted by start.
//
// # Safety
// `store` must be a live handle; strings NUL-terminated; `out_json` writable.
enum VschedStatus vsched_store_list_events(const struct VschedStore *store,
                                           const char *start,
                                           const char *end,
                                           char **out_json);

// Records overlapping the window the intent resolves to, as a JSON array.
//
// # Safety
// `store` must be a live handle; strings NUL-terminated; `out_json` writable.
enum VschedStatus vsched_store_find_conflicts(const struct VschedStore *store,
                                              const char *intent_json,
                                              const char *now,
                                              const char *tz,
                                              char **out_json);

// Builds a text pipeline from gateway config JSON (NULL for defaults).
// Confirmation mode is rejected: there is no operator on this interface.
//
// # Safety
// `config_json` must be NULL or NUL-terminated; `out_gateway` writable.
enum VschedStatus vsched_gateway_new(const char *config_json, struct VschedGateway **out_gateway);

// Releases a gateway handle. NULL is a no-op.
//
// # Safety
// `gateway` must be NULL or a handle from [`vsched_gateway_new`], freed once.
void vsched_gateway_free(struct VschedGateway *gateway);

// Runs one utterance to its terminal stage. Writes the session's stage
// events as a JSON array. A pipeline failure is reported as a `failed`
// event, not as an error status.
//
// # Safety
// `gateway` must be a live handle; `text` NUL-terminated; `out_json` writable.
enum VschedStatus vsched_gateway_handle_utterance(const struct VschedGateway *gateway,
                                                  const char *text,
                                                  char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VSCHED_H */
