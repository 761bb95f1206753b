#ifndef PDL_H
#define PDL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Marks a point outside the domain of a conjugacy.
#define PDL_NO_IMAGE ~0

// Result codes shared by every entry point.
typedef enum PdlStatus {
  PDL_STATUS_OK = 0,
  PDL_STATUS_NULL_POINTER = 1,
  PDL_STATUS_INVALID_UTF8 = 2,
  PDL_STATUS_PARSE = 3,
  PDL_STATUS_INVALID_ARGUMENT = 4,
  PDL_STATUS_UNSUPPORTED = 5,
  PDL_STATUS_BUDGET = 6,
  // A Rust panic was caught at the boundary.
  PDL_STATUS_INTERNAL = 7,
} PdlStatus;

typedef enum PdlVariant {
  PDL_VARIANT_EXPANSIVE = 0,
  PDL_VARIANT_UNIFORM = 1,
  PDL_VARIANT_MINIMAL = 2,
} PdlVariant;

// A finite system loaded from `.pdl` text.
typedef struct PdlSystem PdlSystem;

// Exact GH0 bounds. Strings are owned by the caller; release them with
// [`pdl_string_free`].
typedef struct PdlGhBounds {
  char *lower;
  char *upper;
  bool complete;
} PdlGhBounds;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or "" after success.
const char *pdl_last_error(void);

// Static, NUL-terminated crate version.
const char *pdl_version(void);

// Parse `.pdl` text holding a finite system (explicit or lattice stanza).
//
// # Safety
// `text_ptr` must be a NUL-terminated string and `out_sys` writable.
enum PdlStatus pdl_system_from_text(const char *text_ptr, struct PdlSystem **out_sys);

// # Safety
// `sys` must come from [`pdl_system_from_text`] and not be used afterwards.
void pdl_system_free(struct PdlSystem *sys);

// Number of points, or 0 for a null handle.
//
// # Safety
// `sys` must be null or a live handle.
size_t pdl_system_len(const struct PdlSystem *sys);

// # Safety
// `sys` must be a live handle and `image` writable.
enum PdlStatus pdl_system_apply(const struct PdlSystem *sys, size_t x, size_t *image);

// Writes 1 or 0 per point into `flags` (length `pdl_system_len`).
//
// # Safety
// `c` must be a NUL-terminated string, `flags` must hold `len` bytes.
enum PdlStatus pdl_classify(const struct PdlSystem *sys,
                            enum PdlVariant variant,
                            const char *c,
                            uint8_t *flags,
                            size_t len);

// Exact shadowing verdict at `x`.
//
// # Safety
// String arguments must be NUL-terminated and `holds` writable.
enum PdlStatus pdl_shadowable(const struct PdlSystem *sys,
                              size_t x,
                              const char *eps,
                              const char *delta,
                              bool *holds);

// Build the conjugacy of `g` into `f` on the `g`-orbit closure of `x`.
// `eta` may be null for the default schedule. `images` receives `h(u)` per
// point of `g`, or [`PDL_NO_IMAGE`] off the domain.
//
// # Safety
// `images` must hold `len` slots and `holds` must be writable.
enum PdlStatus pdl_conjugacy(const struct PdlSystem *f,
                             const struct PdlSystem *g,
                             size_t x,
                             const char *eps,
                             const char *delta,
                             const char *eta,
                             size_t *images,
                             size_t len,
                             bool *holds);

// Exact GH0 distance between two finite systems under a node budget.
// Returns `PDL_STATUS_BUDGET` with valid bounds filled in when the search
// was cut short.
//
// # Safety
// `bounds` must be writable.
enum PdlStatus pdl_gh_distance(const struct PdlSystem *f,
                               const struct PdlSystem *g,
                               uint64_t budget,
                               struct PdlGhBounds *bounds);

// # Safety
// `s` must be null or a string returned by this library.
void pdl_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PDL_H */
