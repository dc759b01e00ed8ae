#ifndef RDR_H
#define RDR_H

/* C interface to the relative density ratio toolkit.
 *
 * Every function returns rdr_status; RDR_OK means success and any other
 * value leaves a human-readable message in rdr_last_error() (thread-local).
 * Handles are created through rdr_*_new / factory calls and released with
 * the matching rdr_*_free. Returned const char* pointers stay valid until
 * the owning handle is modified or freed.
 */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rdr_status {
  RDR_OK = 0,
  RDR_ERR_INVALID_ARGUMENT = 1, /* null pointer or malformed call */
  RDR_ERR_SHAPE = 2,            /* mismatched dimensions */
  RDR_ERR_DOMAIN = 3,           /* value outside mathematical domain */
  RDR_ERR_SINGULAR = 4,         /* linear system without usable pivot */
  RDR_ERR_PARSE = 5,            /* malformed serialized document */
  RDR_ERR_NUMERIC = 6,          /* non-finite result mid-computation */
  RDR_ERR_IO = 7,               /* filesystem trouble */
  RDR_ERR_INTERNAL = 8          /* anything else */
} rdr_status;

const char* rdr_last_error(void);
const char* rdr_version(void);

/* ---------- dense matrices ---------- */

typedef struct rdr_matrix rdr_matrix;

/* row_major may be NULL for an all-zero matrix of the given shape. */
rdr_status rdr_matrix_new(size_t rows, size_t cols, const double* row_major,
                          rdr_matrix** out);
rdr_status rdr_matrix_set_name(rdr_matrix* m, size_t col, const char* name);
rdr_status rdr_matrix_shape(const rdr_matrix* m, size_t* rows, size_t* cols);
/* out must hold rows*cols doubles; layout is row-major. */
rdr_status rdr_matrix_copy_data(const rdr_matrix* m, double* out);
/* Unnamed columns yield the empty string. */
rdr_status rdr_matrix_name(const rdr_matrix* m, size_t col, const char** out);
void rdr_matrix_free(rdr_matrix* m);

/* ---------- ratio models ---------- */

typedef enum rdr_mode {
  RDR_MODE_DR = 0,      /* plain density ratio, softplus-floor head */
  RDR_MODE_RDR = 1,     /* relative ratio against the 50/50 mixture */
  RDR_MODE_KSAMPLE = 2  /* one ratio per sample against the pooled mixture */
} rdr_mode;

typedef struct rdr_train_config {
  rdr_mode mode;
  double alpha;             /* mixture weight; forced to 0 (dr) or 1/K */
  size_t epochs;
  size_t batch_size;
  uint64_t seed;
  double holdout_fraction;  /* [0, 0.5]; 0 selects on training loss */
  double learning_rate;
  int standardize;          /* nonzero: z-score inputs on pooled train rows */
  const size_t* hidden_widths; /* NULL keeps the default 64,64,64,64 */
  size_t n_hidden;
} rdr_train_config;

void rdr_train_config_init(rdr_train_config* cfg);

typedef struct rdr_model rdr_model;

/* Trace arrays, when non-NULL, must hold cfg->epochs entries each; they
 * receive per-epoch training and selection losses. */
rdr_status rdr_train(const rdr_matrix* xp, const rdr_matrix* xq,
                     const rdr_train_config* cfg, rdr_model** out,
                     double* train_loss_trace, double* holdout_loss_trace,
                     size_t* best_epoch);
/* out must hold k handles; entry i scores sample i against the pooled mix. */
rdr_status rdr_ksample_train(const rdr_matrix* const* samples, size_t k,
                             const rdr_train_config* cfg, rdr_model** out);

/* out_scores must hold one double per row of x. */
rdr_status rdr_model_eval(const rdr_model* m, const rdr_matrix* x,
                          double* out_scores);
/* Evenly spaced 1-d grid; out_x/out_scores must hold `points` doubles. */
rdr_status rdr_model_eval_grid(const rdr_model* m, double lo, double hi,
                               size_t points, double* out_x,
                               double* out_scores);
/* Balancing loss of the fitted scores on fresh samples; any output pointer
 * may be NULL. h2 = 1 - loss, clipped to [0, cap(alpha)]. */
rdr_status rdr_model_h2(const rdr_model* m, const rdr_matrix* xp,
                        const rdr_matrix* xq, double* loss, double* h2_raw,
                        double* h2_clipped);
/* Best-epoch holdout report captured during training; zeros for models
 * loaded from JSON. Any output pointer may be NULL. */
rdr_status rdr_model_holdout_report(const rdr_model* m, double* loss,
                                    double* h2_raw, double* h2_clipped,
                                    uint64_t* n_p, uint64_t* n_q);
rdr_status rdr_model_input_dim(const rdr_model* m, size_t* out);
rdr_status rdr_model_mode(const rdr_model* m, const char** out);
rdr_status rdr_model_train_hashes(const rdr_model* m, const char** hash_p,
                                  const char** hash_q);
rdr_status rdr_model_set_train_hashes(rdr_model* m, const char* hash_p,
                                      const char* hash_q);
/* JSON round-trips bitwise; release the string with rdr_string_free. */
rdr_status rdr_model_to_json(const rdr_model* m, char** out);
rdr_status rdr_model_from_json(const char* text, rdr_model** out);
void rdr_model_free(rdr_model* m);
void rdr_string_free(char* s);

/* ---------- synthetic scenarios ---------- */

typedef struct rdr_scenario rdr_scenario;

rdr_status rdr_scenario_gauss_shift(double delta, rdr_scenario** out);
/* case_name: partial-precision | partial-recall | mode-reweight */
rdr_status rdr_scenario_beta_mixture(const char* case_name, rdr_scenario** out);
rdr_status rdr_scenario_sample(const rdr_scenario* s, size_t n_p, size_t n_q,
                               uint64_t seed, rdr_matrix** xp, rdr_matrix** xq);
rdr_status rdr_scenario_range(const rdr_scenario* s, double* lo, double* hi);
/* Evenly spaced oracle curves over the scenario's natural range. All five
 * arrays must hold `points` (>= 2) doubles; g is +inf where q vanishes and
 * r equals 2 exactly where only p is alive. */
rdr_status rdr_scenario_oracle(const rdr_scenario* s, size_t points, double* x,
                               double* p, double* q, double* g, double* r);
/* mixture_denominator nonzero: H^2(p, (p+q)/2); zero: H^2(p, q). */
rdr_status rdr_scenario_quadrature_h2(const rdr_scenario* s,
                                      int mixture_denominator, double* out);
/* Monte-Carlo H^2 between score pushforwards of P and the 50/50 mixture. */
rdr_status rdr_scenario_pushforward_h2(const rdr_scenario* s,
                                       const rdr_model* m, size_t n_mc,
                                       size_t bins, uint64_t seed, double* out);
void rdr_scenario_free(rdr_scenario* s);

/* ---------- score analytics ---------- */

typedef struct rdr_summary_stats {
  size_t length;
  double mean;
  double std_dev; /* n-1 denominator */
  double min;
  double q1;      /* type-7 quantiles */
  double median;
  double q3;
  double max;
} rdr_summary_stats;

rdr_status rdr_summarize(const double* scores, size_t n,
                         rdr_summary_stats* out);

/* Half-open bins on [lo, hi), last bin closed; out-of-range values land in
 * underflow/overflow. edges holds bins+1 doubles, counts bins entries;
 * density (optional) receives count / (in-range total * width). */
rdr_status rdr_histogram(const double* scores, size_t n, size_t bins,
                         double lo, double hi, double* edges, uint64_t* counts,
                         uint64_t* underflow, uint64_t* overflow,
                         double* density);

typedef struct rdr_attribution rdr_attribution;

/* Logistic regression of 1{score > threshold} on all covariate columns
 * jointly; rows come back sorted by ascending p-value. */
rdr_status rdr_logistic_attribution(const double* scores, size_t n,
                                    const rdr_matrix* covariates,
                                    double threshold, rdr_attribution** out);
rdr_status rdr_attribution_count(const rdr_attribution* a, size_t* out);
rdr_status rdr_attribution_row(const rdr_attribution* a, size_t index,
                               const char** name, double* coef,
                               double* std_error, double* z, double* p_value);
rdr_status rdr_attribution_intercept(const rdr_attribution* a, double* coef,
                                     double* std_error, double* z,
                                     double* p_value);
rdr_status rdr_attribution_flags(const rdr_attribution* a, int* converged,
                                 int* separation, uint64_t* iterations);
void rdr_attribution_free(rdr_attribution* a);

/* Average-rank Spearman correlation with a t-approximation p-value. */
rdr_status rdr_spearman(const double* x, const double* y, size_t n,
                        double* rho, double* p_value);

/* Rows must be nonnegative and sum to 1 within 1e-6. */
rdr_status rdr_validate_composition(const rdr_matrix* table);
rdr_status rdr_clr_transform(const rdr_matrix* table, double pseudocount,
                             rdr_matrix** out);
/* mapping given as parallel arrays column name -> group name. */
rdr_status rdr_aggregate_groups(const rdr_matrix* table,
                                const char* const* columns,
                                const char* const* groups, size_t n_pairs,
                                rdr_matrix** out);

typedef struct rdr_association rdr_association;

/* Aggregate, CLR-transform, then rank-correlate scores against every group;
 * entries come back sorted by |rho| descending. */
rdr_status rdr_association_scan(const double* scores, size_t n,
                                const rdr_matrix* table,
                                const char* const* columns,
                                const char* const* groups, size_t n_pairs,
                                double pseudocount, rdr_association** out);
rdr_status rdr_association_count(const rdr_association* a, size_t* out);
rdr_status rdr_association_entry(const rdr_association* a, size_t index,
                                 const char** group, double* rho,
                                 double* p_value);
void rdr_association_free(rdr_association* a);

#ifdef __cplusplus
}
#endif

#endif /* RDR_H */
