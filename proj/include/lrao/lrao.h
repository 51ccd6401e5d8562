/* C interface to the weak-signal detection library.
 *
 * All functions returning int use 0 for success. On failure they return
 * a nonzero code (LRAO_EINVAL for bad arguments, LRAO_EFAIL for runtime
 * errors) and a message is available from lrao_last_error() on the same
 * thread. Handles are opaque; every *_new/_load has a matching *_free.
 */
#ifndef LRAO_H
#define LRAO_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#define LRAO_OK 0
#define LRAO_EINVAL 1
#define LRAO_EFAIL 2

/* Message for the most recent failure on the calling thread; never NULL. */
const char* lrao_last_error(void);

/* Trained network plus (optionally) its frozen detector context. */
typedef struct lrao_model lrao_model;

lrao_model* lrao_model_load(const char* path);
int lrao_model_save(const lrao_model* model, const char* path);
void lrao_model_free(lrao_model* model);

/* Sequence length the stored detector context expects; 0 when the model
 * carries no context. */
size_t lrao_model_context_length(const lrao_model* model);
/* Number of signal parameters of the stored context; 0 without one. */
int lrao_model_dof(const lrao_model* model);

/* Applies the learned transform. y must hold n doubles. */
int lrao_model_forward(const lrao_model* model, const double* x, size_t n, double* y);

/* Detection statistic of one raw sequence of the context length.
 * statistic: "lrao" (chi-squared form) or "llmp" (scalar one-sided). */
int lrao_model_stat(const lrao_model* model, const char* statistic, const double* x, size_t n,
                    double* out_stat);

/* Null-distribution helpers for the lrao statistic. */
int lrao_chi2_threshold(int dof, double fpr, double* out_gamma);
int lrao_chi2_right_tail(int dof, double noncentrality, double gamma, double* out_p);

/* Runs one experiment command ("simulate-cauchy", "gm-demo", "train",
 * "detect", "roc", "sensor-cv", "surrogate-gen") with a key = value
 * configuration text; artifacts land under out_dir. Re-running with the
 * emitted manifest.txt as config_text reproduces them bit-exactly. */
int lrao_run(const char* command, const char* config_text, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif /* LRAO_H */
