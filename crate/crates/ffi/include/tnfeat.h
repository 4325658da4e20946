#ifndef TNFEAT_H
#define TNFEAT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum TnfStatus {
  TNF_STATUS_OK = 0,
  TNF_STATUS_NULL_POINTER = 1,
  TNF_STATUS_INVALID_ARGUMENT = 2,
  TNF_STATUS_SHAPE_MISMATCH = 3,
  TNF_STATUS_NO_CONVERGENCE = 4,
  TNF_STATUS_IO = 5,
  TNF_STATUS_FORMAT = 6,
  TNF_STATUS_BUFFER_TOO_SMALL = 7,
  TNF_STATUS_PANIC = 8,
} TnfStatus;

/**
 * Mixed-canonical MPS model handle.
 */
typedef struct TnfMpsModel TnfMpsModel;

/**
 * Dense tensor handle.
 */
typedef struct TnfTensor TnfTensor;

/**
 * Tucker (HOOI) model handle.
 */
typedef struct TnfTuckerModel TnfTuckerModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *tnf_last_error(void);

void tnf_clear_error(void);

/**
 * Builds a tensor from `order` extents and `len` values (first index
 * fastest). The values are copied.
 */
enum TnfStatus tnf_tensor_new(const size_t *shape,
                              size_t order,
                              const double *data,
                              size_t len,
                              struct TnfTensor **out);

void tnf_tensor_free(struct TnfTensor *t);

/**
 * Number of modes, or 0 for a null handle.
 */
size_t tnf_tensor_order(const struct TnfTensor *t);

/**
 * Number of elements, or 0 for a null handle.
 */
size_t tnf_tensor_len(const struct TnfTensor *t);

enum TnfStatus tnf_tensor_shape(const struct TnfTensor *t, size_t *buf, size_t cap, size_t *len);

enum TnfStatus tnf_tensor_data(const struct TnfTensor *t, double *buf, size_t cap, size_t *len);

enum TnfStatus tnf_tensor_load(const char *path, struct TnfTensor **out);

enum TnfStatus tnf_tensor_save(const struct TnfTensor *t, const char *path);

/**
 * Decomposes a stack (samples last) at threshold `eps`. A `core_position`
 * of 0 selects the middle of the chain.
 */
enum TnfStatus tnf_mps_decompose(const struct TnfTensor *stack,
                                 double eps,
                                 size_t core_position,
                                 struct TnfMpsModel **out);

void tnf_mps_free(struct TnfMpsModel *m);

/**
 * Copy of the training core, shaped `D_{n-1} x D_n x K`.
 */
enum TnfStatus tnf_mps_core(const struct TnfMpsModel *m, struct TnfTensor **out);

/**
 * Bond dimensions `D_0 .. D_{N+1}` (both ends are 1).
 */
enum TnfStatus tnf_mps_bond_dims(const struct TnfMpsModel *m, size_t *buf, size_t cap, size_t *len);

/**
 * Features per sample, or 0 for a null handle.
 */
size_t tnf_mps_n_features(const struct TnfMpsModel *m);

/**
 * Projects a test stack onto the model's factors.
 */
enum TnfStatus tnf_mps_project(const struct TnfMpsModel *m,
                               const struct TnfTensor *stack,
                               struct TnfTensor **out);

/**
 * Contracts the model back to a full tensor in chain order.
 */
enum TnfStatus tnf_mps_reconstruct(const struct TnfMpsModel *m, struct TnfTensor **out);

enum TnfStatus tnf_mps_save(const struct TnfMpsModel *m, const char *path);

enum TnfStatus tnf_mps_load(const char *path, struct TnfMpsModel **out);

/**
 * HOOI decomposition of a stack (samples last). `max_iters` of 0 and a
 * non-positive `tol` select the defaults.
 */
enum TnfStatus tnf_tucker_decompose(const struct TnfTensor *stack,
                                    double eps,
                                    size_t max_iters,
                                    double tol,
                                    struct TnfTuckerModel **out);

void tnf_tucker_free(struct TnfTuckerModel *m);

/**
 * Copy of the training core, shaped `D_1 x ... x D_N x K`.
 */
enum TnfStatus tnf_tucker_core(const struct TnfTuckerModel *m, struct TnfTensor **out);

enum TnfStatus tnf_tucker_ranks(const struct TnfTuckerModel *m,
                                size_t *buf,
                                size_t cap,
                                size_t *len);

/**
 * Fit after initialization and after each iteration.
 */
enum TnfStatus tnf_tucker_objective_trace(const struct TnfTuckerModel *m,
                                          double *buf,
                                          size_t cap,
                                          size_t *len);

enum TnfStatus tnf_tucker_project(const struct TnfTuckerModel *m,
                                  const struct TnfTensor *stack,
                                  struct TnfTensor **out);

enum TnfStatus tnf_tucker_save(const struct TnfTuckerModel *m, const char *path);

enum TnfStatus tnf_tucker_load(const char *path, struct TnfTuckerModel **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TNFEAT_H */
