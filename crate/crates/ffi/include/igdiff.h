/* C interface to the inverse Gaussian difference distribution library. */

#ifndef IGDIFF_H
#define IGDIFF_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every call. Zero means success; anything else leaves the
// out-parameters untouched.
typedef enum IgdiffStatus {
  IgdiffStatus_Ok = 0,
  // A required pointer was null.
  IgdiffStatus_NullArgument,
  // A scalar argument was NaN where a number is required.
  IgdiffStatus_InvalidArgument,
  // Parameters outside the domain of the requested quantity.
  IgdiffStatus_DomainError,
  // The integrator could not certify the requested tolerance.
  IgdiffStatus_AccuracyNotReached,
  // The moment set admits no fit (requires 3 kurtosis > 5 skewness^2).
  IgdiffStatus_InfeasibleMoments,
  // Degenerate input, e.g. the equal-ratio closed form with a1 == a2.
  IgdiffStatus_DegenerateInput,
  // Density support does not match the requested comparison.
  IgdiffStatus_SupportMismatch,
  // Invalid tolerance or resource configuration.
  IgdiffStatus_ConfigError,
  // A panic was caught at the boundary; treat the call as failed.
  IgdiffStatus_InternalError,
} IgdiffStatus;

// Which pipeline evaluates a tail probability.
typedef enum IgdiffTailMethod {
  // Adaptive quadrature of the exact convolution.
  IgdiffTailMethod_Exact = 0,
  // Moment-matched normal inverse Gaussian surrogate.
  IgdiffTailMethod_Nig = 1,
  // Large-z closed-form tail approximation.
  IgdiffTailMethod_Asymptotic = 2,
} IgdiffTailMethod;

// Opaque handle for one (X1, X2) pair plus its quadrature settings.
typedef struct IgdiffPair IgdiffPair;

// Opaque reproducible sampler of Z = X1 - X2. The draw sequence depends
// only on the parameters and the seed, never on how calls are batched.
typedef struct IgdiffSampler IgdiffSampler;

// First four cumulants of a scalar law.
typedef struct IgdiffCumulants {
  double k1;
  double k2;
  double k3;
  double k4;
} IgdiffCumulants;

// Normal inverse Gaussian parameters: tail weight alpha, asymmetry beta,
// location mu, scale delta. Valid when alpha > 0, delta > 0, |beta| < alpha.
typedef struct IgdiffNigParams {
  double alpha;
  double beta;
  double mu;
  double delta;
} IgdiffNigParams;

// Mean, variance, skewness and excess kurtosis of a scalar law.
typedef struct IgdiffMoments {
  double mean;
  double variance;
  double skewness;
  double excess_kurtosis;
} IgdiffMoments;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Standard normal cumulative distribution function.
enum IgdiffStatus igdiff_std_normal_cdf(double x, double *out);

// Modified Bessel function K1(x) for x > 0.
enum IgdiffStatus igdiff_bessel_k1(double x, double *out);

// ln K1(x) for x > 0; finite far beyond the underflow point of K1 itself.
enum IgdiffStatus igdiff_log_bessel_k1(double x, double *out);

// Density of the inverse Gaussian first-hitting-time law IG(a, b) at x.
enum IgdiffStatus igdiff_ig_pdf(double a, double b, double x, double *out);

// Natural log of the IG(a, b) density at x.
enum IgdiffStatus igdiff_ig_log_pdf(double a, double b, double x, double *out);

// Cumulative distribution function of IG(a, b) at x.
enum IgdiffStatus igdiff_ig_cdf(double a, double b, double x, double *out);

// Upper tail P(X > x) of IG(a, b), accurate deep into the tail.
enum IgdiffStatus igdiff_ig_tail(double a, double b, double x, double *out);

// ln P(X > x) of IG(a, b); stays finite when the tail underflows.
enum IgdiffStatus igdiff_ig_log_tail(double a, double b, double x, double *out);

// Moment generating function E[e^{tX}] of IG(a, b); requires t <= b^2 / 2.
enum IgdiffStatus igdiff_ig_mgf(double a, double b, double t, double *out);

// First four cumulants of IG(a, b).
enum IgdiffStatus igdiff_ig_cumulants(double a, double b, struct IgdiffCumulants *out);

// Convert a physical channel (distance d, drift v, diffusion D) into the
// IG(a, b) parameters of its first-hitting time: a = d / sqrt(2 D),
// b = v / sqrt(2 D).
enum IgdiffStatus igdiff_physical_to_ig(double d,
                                        double v,
                                        double diffusion,
                                        double *a_out,
                                        double *b_out);

// Normal inverse Gaussian density at y.
enum IgdiffStatus igdiff_nig_pdf(struct IgdiffNigParams p, double y, double *out);

// Natural log of the normal inverse Gaussian density at y.
enum IgdiffStatus igdiff_nig_log_pdf(struct IgdiffNigParams p, double y, double *out);

// Upper tail P(Y > y) of the normal inverse Gaussian law, by adaptive
// quadrature at the library's default tolerances.
enum IgdiffStatus igdiff_nig_tail(struct IgdiffNigParams p, double y, double *out);

// Mean, variance, skewness and excess kurtosis implied by NIG parameters.
enum IgdiffStatus igdiff_nig_moments(struct IgdiffNigParams p, struct IgdiffMoments *out);

// Fit NIG parameters to a moment set by four-moment matching. Fails with
// `InfeasibleMoments` when 3 excess_kurtosis <= 5 skewness^2.
enum IgdiffStatus igdiff_nig_fit(struct IgdiffMoments m, struct IgdiffNigParams *out);

// Cumulants of Z = X1 - X2 for X1 ~ IG(a1, b1), X2 ~ IG(a2, b2).
enum IgdiffStatus igdiff_diff_cumulants(double a1,
                                        double b1,
                                        double a2,
                                        double b2,
                                        struct IgdiffCumulants *out);

// Moments of Z = X1 - X2.
enum IgdiffStatus igdiff_moments_of_diff(double a1,
                                         double b1,
                                         double a2,
                                         double b2,
                                         struct IgdiffMoments *out);

// Moment-matched NIG surrogate for Z = X1 - X2.
enum IgdiffStatus igdiff_nig_approx_diff(double a1,
                                         double b1,
                                         double a2,
                                         double b2,
                                         struct IgdiffNigParams *out);

// Closed-form NIG surrogate for the symmetric case (equal IG parameters
// on both arms).
enum IgdiffStatus igdiff_nig_usecase1(double a, double b, struct IgdiffNigParams *out);

// Closed-form NIG surrogate for the equal-ratio case b_i = c a_i.
// Fails with `DegenerateInput` when a1 == a2.
enum IgdiffStatus igdiff_nig_usecase2(double a1, double a2, double c, struct IgdiffNigParams *out);

// Create a pair handle with the default tolerances (absolute 1e-12,
// relative 1e-9). The handle must be released with `igdiff_pair_free`.
enum IgdiffStatus igdiff_pair_new(double a1,
                                  double b1,
                                  double a2,
                                  double b2,
                                  struct IgdiffPair **out);

// Create a pair handle with explicit quadrature tolerances.
enum IgdiffStatus igdiff_pair_new_with_tol(double a1,
                                           double b1,
                                           double a2,
                                           double b2,
                                           double abs_tol,
                                           double rel_tol,
                                           struct IgdiffPair **out);

// Release a pair handle. Null is accepted and ignored.
void igdiff_pair_free(struct IgdiffPair *pair);

// Density of Z = X1 - X2 at z through the exact convolution.
enum IgdiffStatus igdiff_pair_conv_pdf(const struct IgdiffPair *pair, double z, double *out);

// ln of the exact convolution density at z.
enum IgdiffStatus igdiff_pair_conv_log_pdf(const struct IgdiffPair *pair, double z, double *out);

// Exact upper tail P(Z > z).
enum IgdiffStatus igdiff_pair_conv_tail(const struct IgdiffPair *pair, double z, double *out);

// ln of the exact upper tail; finite even when the tail underflows.
enum IgdiffStatus igdiff_pair_conv_log_tail(const struct IgdiffPair *pair, double z, double *out);

// z such that P(Z > z) equals `prob`, for prob strictly inside (0, 1).
enum IgdiffStatus igdiff_pair_conv_quantile(const struct IgdiffPair *pair,
                                            double prob,
                                            double *out);

// Large-z closed-form tail approximation at z.
enum IgdiffStatus igdiff_pair_asymptotic_tail(const struct IgdiffPair *pair, double z, double *out);

// ln of the large-z tail approximation at z.
enum IgdiffStatus igdiff_pair_asymptotic_log_tail(const struct IgdiffPair *pair,
                                                  double z,
                                                  double *out);

// The constant the tail approximation approaches as z decreases: its
// linear value (0.0 when it underflows) and its natural log.
enum IgdiffStatus igdiff_pair_tail_floor(const struct IgdiffPair *pair,
                                         double *value_out,
                                         double *log_value_out);

// Crossover probability P(X1 - X2 > t) for t >= 0, by the chosen method.
enum IgdiffStatus igdiff_pair_crossover(const struct IgdiffPair *pair,
                                        double t,
                                        enum IgdiffTailMethod method,
                                        double *out);

// Create a sampler handle; release it with `igdiff_sampler_free`.
enum IgdiffStatus igdiff_sampler_new(double a1,
                                     double b1,
                                     double a2,
                                     double b2,
                                     uint64_t seed,
                                     struct IgdiffSampler **out);

// Next draw of Z = X1 - X2.
enum IgdiffStatus igdiff_sampler_next(struct IgdiffSampler *sampler, double *out);

// Release a sampler handle. Null is accepted and ignored.
void igdiff_sampler_free(struct IgdiffSampler *sampler);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IGDIFF_H */
