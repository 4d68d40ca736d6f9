#ifndef ROBUSTSELL_H
#define ROBUSTSELL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RsPolicyKind {
  RS_POLICY_KIND_UNIFORM = 0,
  RS_POLICY_KIND_FULL = 1,
  RS_POLICY_KIND_MIXTURE = 2,
  RS_POLICY_KIND_BINARY = 3,
  RS_POLICY_KIND_DEGENERATE = 4,
  RS_POLICY_KIND_W_BAR_FAMILY = 5,
  RS_POLICY_KIND_HHU_FAMILY = 6,
  RS_POLICY_KIND_CUSTOM = 7,
} RsPolicyKind;

typedef enum RsRegion {
  RS_REGION_FULL_INFO_ALL = 0,
  RS_REGION_UNIFORM_ALL = 1,
  RS_REGION_CUTOFF_FULL = 2,
  RS_REGION_CUTOFF_MIXTURE = 3,
} RsRegion;

typedef enum RsStatus {
  RS_STATUS_OK = 0,
  RS_STATUS_NULL_POINTER = 1,
  RS_STATUS_INVALID_PARAMS = 2,
  RS_STATUS_INVALID_DISTRIBUTION = 3,
  RS_STATUS_NUMERICAL = 4,
  RS_STATUS_OUT_OF_BOUNDS = 5,
  RS_STATUS_BAD_STRING = 6,
  RS_STATUS_PANIC = 99,
} RsStatus;

/**
 * Robust strategy with its worst-case revenue.
 */
typedef struct RsStrategy RsStrategy;

/**
 * Region boundaries and cutoffs. Absent values are NaN.
 */
typedef struct RsThresholds {
  double b1;
  double b2;
  double b3;
  double mu_low;
  double mu_high;
  double mu_hat;
  double mu_check;
  double s_hat;
  enum RsRegion region;
  bool cutoff_at_boundary;
} RsThresholds;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length, 0 if there is none.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t rs_last_error(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *rs_version(void);

/**
 * Solves for the robust strategy. On success `*out` owns a new handle.
 *
 * # Safety
 * `out` must be null or a valid pointer.
 */
enum RsStatus rs_strategy_solve(double mu, double xi, double s, struct RsStrategy **out);

/**
 * # Safety
 * `h` must be null or a handle from [`rs_strategy_solve`] not yet freed.
 */
void rs_strategy_free(struct RsStrategy *h);

/**
 * Price of the strategy; NaN for a null handle.
 *
 * # Safety
 * `h` must be null or a live handle.
 */
double rs_strategy_price(const struct RsStrategy *h);

/**
 * Worst-case revenue; NaN for a null handle.
 *
 * # Safety
 * `h` must be null or a live handle.
 */
double rs_strategy_guarantee(const struct RsStrategy *h);

/**
 * # Safety
 * `h` must be null or a live handle; `out` must be null or valid.
 */
enum RsStatus rs_strategy_kind(const struct RsStrategy *h, enum RsPolicyKind *out);

/**
 * Number of atoms in the posterior; 0 for a null handle.
 *
 * # Safety
 * `h` must be null or a live handle.
 */
size_t rs_strategy_atom_count(const struct RsStrategy *h);

/**
 * # Safety
 * `h` must be null or a live handle; `loc` and `mass` null or valid.
 */
enum RsStatus rs_strategy_atom(const struct RsStrategy *h, size_t i, double *loc, double *mass);

/**
 * Number of uniform segments in the posterior; 0 for a null handle.
 *
 * # Safety
 * `h` must be null or a live handle.
 */
size_t rs_strategy_segment_count(const struct RsStrategy *h);

/**
 * Segment `i` carries `mass` spread uniformly on `[lo, hi]`.
 *
 * # Safety
 * `h` must be null or a live handle; output pointers null or valid.
 */
enum RsStatus rs_strategy_segment(const struct RsStrategy *h,
                                  size_t i,
                                  double *lo,
                                  double *hi,
                                  double *mass);

/**
 * Right-continuous CDF of the posterior at `w`; NaN for a null handle.
 *
 * # Safety
 * `h` must be null or a live handle.
 */
double rs_strategy_cdf(const struct RsStrategy *h, double w);

/**
 * Posterior as JSON; free with [`rs_string_free`]. Null on error.
 *
 * # Safety
 * `h` must be null or a live handle.
 */
char *rs_strategy_posterior_json(const struct RsStrategy *h);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void rs_string_free(char *s);

/**
 * Worst-case revenue of price `p` with the best information policy for it.
 *
 * # Safety
 * `out` must be null or valid.
 */
enum RsStatus rs_fixed_price_guarantee(double mu, double xi, double s, double p, double *out);

/**
 * # Safety
 * `out` must be null or valid.
 */
enum RsStatus rs_thresholds(double mu, double xi, double s, struct RsThresholds *out);

/**
 * Demand and revenue at price `p` for posterior `h_json` and outside option
 * `g_json` (JSON with `atoms` and `segments`).
 *
 * # Safety
 * String arguments must be null or NUL-terminated; outputs null or valid.
 */
enum RsStatus rs_demand(double p,
                        const char *h_json,
                        const char *g_json,
                        double s,
                        double *demand,
                        double *revenue);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ROBUSTSELL_H */
