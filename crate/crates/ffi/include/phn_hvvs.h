#ifndef PHN_HVVS_H
#define PHN_HVVS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

/**
 * Result of every fallible call.
 */
typedef enum PhnStatus {
  PHN_STATUS_OK = 0,
  PHN_STATUS_NULL_POINTER = 1,
  PHN_STATUS_INVALID_INPUT = 2,
  PHN_STATUS_UNSUPPORTED_DIMENSION = 3,
  PHN_STATUS_IO = 4,
  PHN_STATUS_FORMAT = 5,
  PHN_STATUS_BUFFER_TOO_SMALL = 6,
  PHN_STATUS_FAILURE = 7,
  PHN_STATUS_PANIC = 8,
} PhnStatus;

/**
 * Voronoi partition of the preference simplex.
 */
typedef struct PhnPartition PhnPartition;

/**
 * Trained hypernetwork together with its evaluated front.
 */
typedef struct PhnRun PhnRun;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *phn_version(void);

/**
 * Message of the last failed call on this thread, or null after a success.
 * Valid until the next call into the library from the same thread.
 */
const char *phn_last_error(void);

/**
 * Exact hypervolume of `count` points of `dim` (2 or 3) minimized
 * objectives, dominated up to `reference`.
 */
enum PhnStatus phn_hypervolume(const double *points,
                               size_t count,
                               size_t dim,
                               const double *reference,
                               double *out);

/**
 * `dHV/dy` for `count` mutually non-dominated points; writes `count * dim`
 * values.
 */
enum PhnStatus phn_hv_gradient(const double *points,
                               size_t count,
                               size_t dim,
                               const double *reference,
                               double *out,
                               size_t out_len);

/**
 * Unit-norm descent weights per solution from a loss matrix whose row `i`
 * holds the `dim` losses of solution `i`; writes `count * dim` values.
 */
enum PhnStatus phn_hv_weights(const double *losses,
                              size_t count,
                              size_t dim,
                              double *out,
                              size_t out_len);

/**
 * Evolves a partition; zero `points` or `generations` keep the defaults.
 */
enum PhnStatus phn_partition_evolve(size_t dim,
                                    size_t sites,
                                    size_t points,
                                    size_t generations,
                                    uint64_t seed,
                                    struct PhnPartition **out);

enum PhnStatus phn_partition_load(const char *path, struct PhnPartition **out);

enum PhnStatus phn_partition_save(const struct PhnPartition *partition, const char *path);

/**
 * Simplex dimension, or 0 for a null handle.
 */
size_t phn_partition_dim(const struct PhnPartition *partition);

/**
 * Number of sites, or 0 for a null handle.
 */
size_t phn_partition_site_count(const struct PhnPartition *partition);

/**
 * Cell-balance fitness, or NaN for a null handle.
 */
double phn_partition_fitness(const struct PhnPartition *partition);

/**
 * Writes the sites, `site_count * dim` values.
 */
enum PhnStatus phn_partition_sites(const struct PhnPartition *partition,
                                   double *out,
                                   size_t out_len);

/**
 * Draws one ray per cell with a generator seeded by `seed`; writes
 * `site_count * dim` values.
 */
enum PhnStatus phn_partition_sample(const struct PhnPartition *partition,
                                    uint64_t seed,
                                    double *out,
                                    size_t out_len);

void phn_partition_free(struct PhnPartition *partition);

/**
 * Trains `solver` on `problem` (names as on the command line) with default
 * settings; a zero `iterations` keeps the default length.
 */
enum PhnStatus phn_train(const char *problem,
                         const char *solver,
                         uint64_t seed,
                         size_t iterations,
                         struct PhnRun **out);

/**
 * HV of the evaluated front, or NaN for a null handle.
 */
double phn_run_hv(const struct PhnRun *run);

/**
 * Number of objectives, or 0 for a null handle.
 */
size_t phn_run_objectives(const struct PhnRun *run);

/**
 * Number of evaluated front points, or 0 for a null handle.
 */
size_t phn_run_front_len(const struct PhnRun *run);

/**
 * Writes the evaluated losses, `front_len * objectives` values.
 */
enum PhnStatus phn_run_front(const struct PhnRun *run, double *out, size_t out_len);

/**
 * Losses of the network's solution for one preference ray of length
 * `objectives`; writes `objectives` values.
 */
enum PhnStatus phn_run_losses(const struct PhnRun *run,
                              const double *ray,
                              size_t ray_len,
                              double *out,
                              size_t out_len);

void phn_run_free(struct PhnRun *run);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PHN_HVVS_H */
