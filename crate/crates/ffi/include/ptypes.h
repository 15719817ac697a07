#ifndef PTYPES_H
#define PTYPES_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PtStatus {
  PT_STATUS_OK = 0,
  PT_STATUS_NULL_POINTER = 1,
  PT_STATUS_INVALID_ARGUMENT = 2,
  PT_STATUS_DIMENSION_MISMATCH = 3,
  PT_STATUS_INSTANCE_TOO_LARGE = 4,
  PT_STATUS_NON_CONVERGENCE = 5,
  PT_STATUS_CODEBOOK_TOO_LARGE = 6,
  PT_STATUS_NUMERICAL_FAILURE = 7,
  PT_STATUS_PANIC = 99,
} PtStatus;

// A channel matrix P(y|x).
typedef struct PtChannel PtChannel;

// A distortion matrix d(x, x̂).
typedef struct PtDistortion PtDistortion;

// A probability distribution.
typedef struct PtDistribution PtDistribution;

typedef struct PtCapacity {
  double capacity_nats;
  double gap_bound;
  uint64_t iterations;
} PtCapacity;

typedef struct PtChannelPrediction {
  double a;
  double b;
  uint8_t p_suc_step;
  double p_suc_erfc;
} PtChannelPrediction;

typedef struct PtTrialReport {
  uint64_t successes;
  uint64_t trials;
  double p_hat;
  double ci95_halfwidth;
  uint64_t seed;
} PtTrialReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the calling thread's last error message, NUL-terminated, into
// `buf` and returns the full message length (excluding NUL).
//
// # Safety
// `buf` must be writable for `len` bytes or null.
uintptr_t pt_last_error_message(char *buf, uintptr_t len);

// # Safety
// `probs` must point to `len` doubles; `out_handle` must be writable.
enum PtStatus pt_distribution_new(const double *probs,
                                  uintptr_t len,
                                  struct PtDistribution **out_handle);

// # Safety
// `handle` must come from `pt_distribution_new` or be null.
void pt_distribution_free(struct PtDistribution *handle);

// # Safety
// Pointers must be valid.
enum PtStatus pt_entropy(const struct PtDistribution *dist, double *result);

// D(p‖q) in nats.
//
// # Safety
// Pointers must be valid.
enum PtStatus pt_relative_information(const struct PtDistribution *p,
                                      const struct PtDistribution *q,
                                      double *result);

// Builds a channel from a row-major `input_size × output_size` matrix.
//
// # Safety
// `matrix` must hold `input_size * output_size` doubles.
enum PtStatus pt_channel_new(const double *matrix,
                             uintptr_t input_size,
                             uintptr_t output_size,
                             struct PtChannel **out_handle);

// # Safety
// `handle` must come from `pt_channel_new` or be null.
void pt_channel_free(struct PtChannel *handle);

// H(y:x) for the given input distribution.
//
// # Safety
// Pointers must be valid.
enum PtStatus pt_mutual_information(const struct PtChannel *channel,
                                    const struct PtDistribution *input,
                                    double *result);

// Capacity by Blahut–Arimoto. `optimal_input` may be null; otherwise it
// receives `input_len` probabilities, which must equal the input size.
//
// # Safety
// Pointers must be valid.
enum PtStatus pt_capacity(const struct PtChannel *channel,
                          double tol,
                          struct PtCapacity *result,
                          double *optimal_input,
                          uintptr_t input_len);

// # Safety
// `matrix` must hold `size * size` doubles.
enum PtStatus pt_distortion_new(const double *matrix,
                                uintptr_t size,
                                struct PtDistortion **out_handle);

// # Safety
// `handle` must come from `pt_distortion_new` or be null.
void pt_distortion_free(struct PtDistortion *handle);

// H_x(D) in nats.
//
// # Safety
// Pointers must be valid.
enum PtStatus pt_rate_distortion(const struct PtDistribution *source,
                                 const struct PtDistortion *distortion,
                                 double max_distortion,
                                 double tol,
                                 double *result);

// ln of the multinomial n!/Π c!, and the Stirling approximation of it.
//
// # Safety
// `counts` must hold `len` values; outputs must be writable.
enum PtStatus pt_ln_class_size(const uint64_t *counts,
                               uintptr_t len,
                               double *exact_log,
                               double *stirling_log);

// ∫ Π p^{a−1} over the simplex.
//
// # Safety
// `exponents` must hold `len` doubles.
enum PtStatus pt_dirichlet_integral(const double *exponents, uintptr_t len, double *result);

// Exact source-coding success probability; `mode` 0 is source-dependent,
// 1 universal.
//
// # Safety
// Pointers must be valid.
enum PtStatus pt_source_coding_psuc(const struct PtDistribution *source,
                                    double rate,
                                    uint64_t n,
                                    uint32_t mode,
                                    double *result);

// Step and erfc success predictions for channel coding at (rate, n).
//
// # Safety
// Pointers must be valid.
enum PtStatus pt_channel_prediction(const struct PtChannel *channel,
                                    const struct PtDistribution *input,
                                    double rate,
                                    uint64_t n,
                                    struct PtChannelPrediction *result);

// Random-coding simulation; `decoder` 0 threshold, 1 pairwise,
// 2 maximum likelihood.
//
// # Safety
// Pointers must be valid.
enum PtStatus pt_simulate_channel_coding(const struct PtChannel *channel,
                                         const struct PtDistribution *input,
                                         double rate,
                                         uint64_t n,
                                         uint64_t trials,
                                         uint32_t decoder,
                                         uint64_t seed,
                                         struct PtTrialReport *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PTYPES_H */
