#ifndef GAL_FFI_H
#define GAL_FFI_H

#include <stddef.h>
#include <stdint.h>

typedef enum GalStatus {
  GAL_STATUS_OK = 0,
  /**
   * A required pointer was null.
   */
  GAL_STATUS_NULL_POINTER = 1,
  /**
   * Invalid argument, configuration or input data.
   */
  GAL_STATUS_CONTRACT = 2,
  /**
   * Training or evaluation hit a non-finite value.
   */
  GAL_STATUS_NUMERIC = 3,
  /**
   * File system failure.
   */
  GAL_STATUS_IO = 4,
  /**
   * A string argument was not valid UTF-8.
   */
  GAL_STATUS_UTF8 = 5,
  /**
   * A Rust panic was caught at the boundary.
   */
  GAL_STATUS_PANIC = 6,
} GalStatus;

/**
 * Opaque graph handle.
 */
typedef struct GalGraph GalGraph;

/**
 * Opaque trained-model handle: parameters plus the config that produced them.
 */
typedef struct GalModel GalModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message (NUL-terminated, truncated
 * to fit) into `buf` and returns the full message length without the NUL.
 * Passing a null `buf` or `len == 0` only queries the length.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t gal_last_error(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *gal_version(void);

/**
 * Samples a block-model graph from `key = value` generator settings
 * (null or empty text for the defaults); `seed` overrides any seed key.
 *
 * # Safety
 * `config` must be null or a valid C string; `out` must be writable.
 */
enum GalStatus gal_graph_generate_sbm(const char *config, uint64_t seed, struct GalGraph **out);

/**
 * Loads `nodes.csv` and `edges.csv` from directory `dir`.
 *
 * # Safety
 * `dir` must be a valid C string; `out` must be writable.
 */
enum GalStatus gal_graph_load(const char *dir, struct GalGraph **out);

/**
 * # Safety
 * `g` must be null or a handle from this library that was not yet freed.
 */
void gal_graph_free(struct GalGraph *g);

/**
 * # Safety
 * `g` must be a live graph handle; `out` must be writable.
 */
enum GalStatus gal_graph_node_count(const struct GalGraph *g, size_t *out);

/**
 * # Safety
 * `g` must be a live graph handle; `out` must be writable.
 */
enum GalStatus gal_graph_edge_count(const struct GalGraph *g, size_t *out);

/**
 * Endpoint of a self-avoiding `hops`-step walk from `v`, or -1 when the
 * walk gets stuck. The walk is a pure function of `(graph, v, hops, seed)`.
 *
 * # Safety
 * `g` must be a live graph handle; `out` must be writable.
 */
enum GalStatus gal_graph_nhop_sample(const struct GalGraph *g,
                                     size_t v,
                                     size_t hops,
                                     uint64_t seed,
                                     int64_t *out);

/**
 * Hop distance between `v` and `w`, or -1 when they are disconnected.
 *
 * # Safety
 * `g` must be a live graph handle; `out` must be writable.
 */
enum GalStatus gal_graph_bfs_distance(const struct GalGraph *g, size_t v, size_t w, int64_t *out);

/**
 * Trains an encoder on `g` with `key = value` training settings (null or
 * empty text for the defaults).
 *
 * # Safety
 * `g` must be a live graph handle, `config` null or a valid C string and
 * `out` writable.
 */
enum GalStatus gal_model_train(const struct GalGraph *g, const char *config, struct GalModel **out);

/**
 * # Safety
 * `m` must be null or a handle from this library that was not yet freed.
 */
void gal_model_free(struct GalModel *m);

/**
 * # Safety
 * `m` must be a live model handle; `out` must be writable.
 */
enum GalStatus gal_model_embedding_dim(const struct GalModel *m, size_t *out);

/**
 * Writes the row-major `node_count x embedding_dim` embeddings of `g` into
 * `buf`, which must hold exactly that many doubles (`len`).
 *
 * # Safety
 * `m` and `g` must be live handles; `buf` must point to `len` writable doubles.
 */
enum GalStatus gal_model_embeddings(const struct GalModel *m,
                                    const struct GalGraph *g,
                                    double *buf,
                                    size_t len);

/**
 * Total variation distance between two distributions over the same `n`
 * outcomes, given as probability vectors.
 *
 * # Safety
 * `p` and `q` must point to `n` readable doubles; `out` must be writable.
 */
enum GalStatus gal_tv_distance(const double *p, const double *q, size_t n, double *out);

/**
 * Exact W1 between `p` and `q` over the shared real-line support `xs`.
 *
 * # Safety
 * `xs`, `p` and `q` must point to `n` readable doubles; `out` must be writable.
 */
enum GalStatus gal_w1_discrete(const double *xs,
                               const double *p,
                               const double *q,
                               size_t n,
                               double *out);

/**
 * Empirical W1 between two samples of `n` points each on the real line.
 *
 * # Safety
 * `a` and `b` must point to `n` readable doubles; `out` must be writable.
 */
enum GalStatus gal_w1_samples(const double *a, const double *b, size_t n, double *out);

/**
 * Unweighted mean of per-class F1 over `classes` labels.
 *
 * # Safety
 * `pred` and `truth` must point to `n` readable values; `out` must be writable.
 */
enum GalStatus gal_macro_f1(const size_t *pred,
                            const size_t *truth,
                            size_t n,
                            size_t classes,
                            double *out);

/**
 * ROC AUC of `scores` against 0/1 `labels`; a contract error unless both
 * labels occur.
 *
 * # Safety
 * `scores` and `labels` must point to `n` readable values; `out` must be writable.
 */
enum GalStatus gal_auc(const double *scores, const uint8_t *labels, size_t n, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GAL_FFI_H */
