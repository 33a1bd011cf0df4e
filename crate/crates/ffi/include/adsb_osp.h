#ifndef ADSB_OSP_H
#define ADSB_OSP_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum OspStatus {
  OSP_STATUS_OK = 0,
  OSP_STATUS_NULL_POINTER = 1,
  OSP_STATUS_INVALID_INPUT = 2,
  OSP_STATUS_INVALID_CONFIG = 3,
  OSP_STATUS_IO = 4,
  OSP_STATUS_NO_FEASIBLE_SOLUTION = 5,
  OSP_STATUS_DEGENERATE_GEOMETRY = 6,
  OSP_STATUS_PANIC = 7,
} OspStatus;

// The front returned by [`osp_optimize`].
typedef struct OspFront OspFront;

// A placement problem with the optimizer settings of its config.
typedef struct OspProblem OspProblem;

// Scores of one placement. `normalized` holds the normalized OF1, OF2 and
// the weighted OF3.
typedef struct OspScores {
  double of1;
  double of2;
  double of3;
  double of3_components[3];
  double normalized[3];
  double penalty;
  size_t n_sensors;
} OspScores;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer
// stays valid until the next failing call on the same thread.
const char *osp_last_error(void);

// Builds a problem from a JSON run config. `deployed_lla` holds
// `n_deployed` latitude, longitude, altitude triples (degrees, metres) of
// sites every solution must keep; it may be null when `n_deployed` is 0.
//
// # Safety
// `config_json` must be a nul-terminated string, `deployed_lla` must point
// to `3 * n_deployed` doubles and `out` must be writable.
enum OspStatus osp_problem_new(const char *config_json,
                               const double *deployed_lla,
                               size_t n_deployed,
                               struct OspProblem **out);

// # Safety
// `problem` must come from [`osp_problem_new`] and not be used afterwards.
void osp_problem_free(struct OspProblem *problem);

// Number of candidate sites, deployed ones included. Zero for null.
//
// # Safety
// `problem` must be null or a live handle.
size_t osp_problem_candidate_count(const struct OspProblem *problem);

// Writes candidate `index` as latitude, longitude, altitude into `lla`
// and whether it is forced into `forced`.
//
// # Safety
// `problem` must be a live handle, `lla` must hold 3 doubles and `forced`
// must be writable.
enum OspStatus osp_problem_candidate(const struct OspProblem *problem,
                                     size_t index,
                                     double *lla,
                                     bool *forced);

// Scores a selection given as one byte per candidate (non-zero selects),
// normalized against reference bounds of the problem.
//
// # Safety
// `genes` must point to `n_genes` bytes and `out` must be writable.
enum OspStatus osp_evaluate(const struct OspProblem *problem,
                            const uint8_t *genes,
                            size_t n_genes,
                            struct OspScores *out);

// Runs the optimizer with the GA settings of the config, optionally
// replacing the seed.
//
// # Safety
// `problem` must be a live handle, `seed` null or readable, `out` writable.
enum OspStatus osp_optimize(const struct OspProblem *problem,
                            const uint64_t *seed,
                            struct OspFront **out);

// # Safety
// `front` must come from [`osp_optimize`] and not be used afterwards.
void osp_front_free(struct OspFront *front);

// Number of front members. Zero for null.
//
// # Safety
// `front` must be null or a live handle.
size_t osp_front_len(const struct OspFront *front);

// # Safety
// `front` must be a live handle and `out` writable.
enum OspStatus osp_front_scores(const struct OspFront *front, size_t index, struct OspScores *out);

// Copies the selected candidate indices of member `index`, ascending, into
// `buf` and stores their count in `len`. When `capacity` is too small only
// `len` is written and the call fails with `InvalidInput`.
//
// # Safety
// `front` must be a live handle, `buf` must hold `capacity` entries and
// `len` must be writable.
enum OspStatus osp_front_selection(const struct OspFront *front,
                                   size_t index,
                                   size_t *buf,
                                   size_t capacity,
                                   size_t *len);

// Picks the member minimizing the weighted normalized objectives among
// those with at most `*budget_cap` sensors (no cap when null).
//
// # Safety
// `front` must be a live handle, `weights` must hold 3 doubles,
// `budget_cap` null or readable and `out_index` writable.
enum OspStatus osp_front_select(const struct OspFront *front,
                                const size_t *budget_cap,
                                const double *weights,
                                size_t *out_index);

// WGS-84 geodetic (degrees, metres) to ECEF metres.
//
// # Safety
// `xyz` must hold 3 doubles.
enum OspStatus osp_geodetic_to_ecef(double lat_deg, double lon_deg, double alt_m, double *xyz);

// GDOP of four receivers (12 ECEF coordinates, metres) for an aircraft
// at the given geodetic position; infinity for a singular geometry.
//
// # Safety
// `sensors_xyz` must hold 12 doubles and `out` must be writable.
enum OspStatus osp_gdop_of_four(double lat_deg,
                                double lon_deg,
                                double alt_m,
                                const double *sensors_xyz,
                                double *out);

// Knapsack penalty of selecting `selected` out of `cells` sites.
//
// # Safety
// `out` must be writable.
enum OspStatus osp_knapsack_penalty(size_t selected, size_t cells, double *out);

// Selects every forced site and nothing else; helper for callers that
// build selections on top of a deployment.
//
// # Safety
// `problem` must be a live handle and `genes` must hold `n_genes` bytes.
enum OspStatus osp_problem_forced_genes(const struct OspProblem *problem,
                                        uint8_t *genes,
                                        size_t n_genes);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ADSB_OSP_H */
