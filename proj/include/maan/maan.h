/*
 * maan.h - C interface to the marginalized average aggregation library.
 *
 * Objects are opaque handles created by maan_*_create/generate/load calls and
 * released with the matching maan_*_free. Every fallible call returns a
 * maan_status; on failure maan_last_error() describes the problem. The error
 * message is thread-local and stays valid until the next failing call on the
 * same thread.
 *
 * Matrices are passed row-major: features are T rows of d doubles.
 */
#ifndef MAAN_MAAN_H
#define MAAN_MAAN_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(MAAN_BUILDING_LIBRARY)
#    define MAAN_API __declspec(dllexport)
#  else
#    define MAAN_API __declspec(dllimport)
#  endif
#else
#  define MAAN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum maan_status {
  MAAN_OK = 0,
  MAAN_ERR_CONTRACT = 1,          /* shape/length mismatch, value out of domain */
  MAAN_ERR_DEGENERATE = 2,        /* e.g. all probabilities zero */
  MAAN_ERR_ENUMERATION_LIMIT = 3, /* brute force asked for T > 25 */
  MAAN_ERR_PRECONDITION = 4,
  MAAN_ERR_DIVERGENCE = 5,        /* training produced a non-finite loss */
  MAAN_ERR_IO = 6,
  MAAN_ERR_PARSE = 7,
  MAAN_ERR_CONFIG = 8,
  MAAN_ERR_INTERNAL = 9
} maan_status;

typedef enum maan_aggregator {
  MAAN_AGG_STPN = 0, /* weighted sum */
  MAAN_AGG_DROPOUT = 1,
  MAAN_AGG_NORM = 2,
  MAAN_AGG_SOFTMAXNORM = 3,
  MAAN_AGG_MAAN = 4
} maan_aggregator;

MAAN_API const char* maan_version(void);
MAAN_API const char* maan_last_error(void);
MAAN_API const char* maan_status_name(maan_status status);
/* Accepts "stpn", "dropout", "norm", "softmaxnorm", "maan". */
MAAN_API maan_status maan_aggregator_parse(const char* name, maan_aggregator* out);

/* ---- MAA operator ------------------------------------------------------ */

typedef struct maan_trace maan_trace;

/* out_h: d doubles. */
MAAN_API maan_status maan_aggregate_bruteforce(const double* features, size_t T, size_t d,
                                               const double* probs, double* out_h);
/* renormalize != 0 divides the aggregate by 1 - prod(1 - p_t). */
MAAN_API maan_status maan_forward(const double* features, size_t T, size_t d,
                                  const double* probs, int renormalize, maan_trace** out);
MAAN_API void maan_trace_free(maan_trace* trace);
MAAN_API size_t maan_trace_length(const maan_trace* trace);
MAAN_API size_t maan_trace_dim(const maan_trace* trace);
/* out_h: d doubles. */
MAAN_API maan_status maan_trace_aggregate(const maan_trace* trace, double* out_h);
/* out_q: (T+1)*(T+1) doubles, row t holds P(Z_t = i). */
MAAN_API maan_status maan_trace_q_table(const maan_trace* trace, double* out_q);
/* grad_features: T*d, grad_probs: T. Gradient of <upstream, h>. */
MAAN_API maan_status maan_trace_backward(const maan_trace* trace, const double* upstream,
                                         double* grad_features, double* grad_probs);

/* out_mass: T+1 doubles. */
MAAN_API maan_status maan_subset_size_pmf(const double* probs, size_t T, double* out_mass);
/* out_c, out_lambda: T doubles each; out_total may be NULL. */
MAAN_API maan_status maan_context_coefficients(const double* probs, size_t T, double* out_c,
                                               double* out_lambda, double* out_total);
/* out_indices: room for T entries; *out_count receives the set size. 0-based. */
MAAN_API maan_status maan_salient_index_set(const double* probs, size_t T, size_t* out_indices,
                                            size_t* out_count);
MAAN_API maan_status maan_finite_diff_check(const double* features, size_t T, size_t d,
                                            const double* probs, const double* upstream,
                                            double step, double* out_max_rel_error);

/* ---- Reports ----------------------------------------------------------- */

/* Text produced by verify, bench and evaluate. */
typedef struct maan_report maan_report;
MAAN_API void maan_report_free(maan_report* report);
MAAN_API const char* maan_report_text(const maan_report* report);
/* Machine-readable records, one JSON object per line. */
MAAN_API const char* maan_report_records(const maan_report* report);
/* 1 when every check passed (verify); always 1 for bench and evaluate. */
MAAN_API int maan_report_passed(const maan_report* report);

typedef struct maan_verify_config {
  int trials;
  int max_t;
  double tolerance;
  double grad_tolerance;
  uint64_t seed;
} maan_verify_config;

MAAN_API void maan_verify_config_default(maan_verify_config* config);
MAAN_API maan_status maan_verify(const maan_verify_config* config, maan_report** out);

/* t_list must be sorted ascending. */
MAAN_API maan_status maan_bench(const size_t* t_list, size_t n, size_t dim, int repeats,
                                uint64_t seed, maan_report** out);

/* ---- Synthetic data ---------------------------------------------------- */

typedef struct maan_dataset maan_dataset;

typedef struct maan_synth_config {
  int num_classes;
  int feature_dim;
  int train_videos_per_class;
  int test_videos_per_class;
  int snippets_per_video;
  int min_segments;
  int max_segments;
  int min_segment_length;
  int max_segment_length;
  double noise_sigma;
  double background_separation;
  double salience_gradient;
  double snippet_duration;
  uint64_t seed;
} maan_synth_config;

typedef enum maan_split { MAAN_SPLIT_TRAIN = 0, MAAN_SPLIT_TEST = 1 } maan_split;

MAAN_API void maan_synth_config_default(maan_synth_config* config);
MAAN_API maan_status maan_dataset_generate(const maan_synth_config* config, maan_split split,
                                           maan_dataset** out);
MAAN_API maan_status maan_dataset_load(const char* path, maan_dataset** out);
MAAN_API maan_status maan_dataset_save(const maan_dataset* dataset, const char* path);
/* Writes the hidden segments of a generated dataset. */
MAAN_API maan_status maan_dataset_save_ground_truth(const maan_dataset* dataset,
                                                    const char* path);
MAAN_API size_t maan_dataset_size(const maan_dataset* dataset);
MAAN_API void maan_dataset_free(maan_dataset* dataset);

/* ---- Model ------------------------------------------------------------- */

typedef struct maan_model maan_model;

typedef struct maan_train_config {
  maan_aggregator aggregator;
  double learning_rate;
  double adam_beta1;
  double adam_beta2;
  double adam_eps;
  int epochs;
  int batch_size;
  int hidden;
  double leaky_slope;
  double keep_prob;
  int snippets_per_video;
  uint64_t seed;
} maan_train_config;

MAAN_API void maan_train_config_default(maan_train_config* config);
MAAN_API maan_status maan_train(const maan_dataset* dataset, const maan_train_config* config,
                                maan_model** out);
MAAN_API maan_status maan_model_load(const char* path, maan_model** out);
MAAN_API maan_status maan_model_save(const maan_model* model, const char* path);
MAAN_API void maan_model_free(maan_model* model);
MAAN_API maan_aggregator maan_model_aggregator(const maan_model* model);
/* Per-epoch mean training loss; empty for loaded models. */
MAAN_API size_t maan_model_loss_history(const maan_model* model, double* out, size_t capacity);
/* out_probs: num_classes doubles. */
MAAN_API maan_status maan_model_video_probabilities(const maan_model* model,
                                                    const double* features, size_t T, size_t d,
                                                    double* out_probs);

/* ---- Localization and evaluation --------------------------------------- */

typedef struct maan_proposals maan_proposals;

typedef struct maan_proposal {
  const char* video_id; /* owned by the proposals handle */
  int class_id;
  double start_s;
  double end_s;
  double confidence;
} maan_proposal;

typedef struct maan_localize_options {
  const double* threshold_fractions;
  size_t num_threshold_fractions;
  double class_reject;
  double nms_iou;
} maan_localize_options;

/* Defaults: a single 0.2 fraction, class rejection 0.1, NMS IoU 0.5. The
 * fraction array is static storage owned by the library. */
MAAN_API void maan_localize_options_default(maan_localize_options* options);
MAAN_API maan_status maan_localize(const maan_model* model, const maan_dataset* dataset,
                                   const maan_localize_options* options, maan_proposals** out);
MAAN_API maan_status maan_proposals_load(const char* path, maan_proposals** out);
MAAN_API maan_status maan_proposals_save(const maan_proposals* proposals, const char* path);
MAAN_API size_t maan_proposals_size(const maan_proposals* proposals);
MAAN_API maan_status maan_proposals_get(const maan_proposals* proposals, size_t index,
                                        maan_proposal* out);
MAAN_API void maan_proposals_free(maan_proposals* proposals);

/* Ground truth is read from a ground-truth document. iou_thresholds may be
 * NULL to use 0.1..0.9. */
MAAN_API maan_status maan_evaluate(const maan_proposals* proposals, const char* ground_truth_path,
                                   const double* iou_thresholds, size_t n, maan_report** out);
/* Mean AP at thresholds[index] of an evaluation report. */
MAAN_API maan_status maan_report_map(const maan_report* report, size_t index, double* out);

#ifdef __cplusplus
}
#endif

#endif /* MAAN_MAAN_H */
