#pragma once

#include <cstddef>
#include <vector>

#include "errors.hpp"

namespace rdr {

// Outcome of one balancing-loss evaluation. h2_raw = 1 - loss may be slightly
// negative or above the attainable ceiling on finite samples; h2_clipped is
// pinned to [0, cap] where cap = 1 - sqrt(alpha) (cap = 1 when alpha = 0).
struct LossReport {
  double loss = 0.0;
  double h2_raw = 0.0;
  double h2_clipped = 0.0;
  std::size_t n_p = 0;
  std::size_t n_q = 0;
};

// Largest squared-Hellinger value reachable against the alpha-mixture
// denominator: 1 - sqrt(alpha). alpha = 0.5 gives 1 - 1/sqrt(2).
double hellinger_cap(double alpha);

// Validates alpha for two-sample use: must be finite and in [0, 1).
void require_mixture_weight(double alpha);

// loss = 1/2 * mean_i g_p[i]^{-1/2}
//      + 1/2 * (alpha * mean_i g_p[i]^{1/2} + (1-alpha) * mean_j g_q[j]^{1/2}).
// All g values must be strictly positive and finite.
LossReport balancing_loss(const std::vector<double>& g_p,
                          const std::vector<double>& g_q, double alpha);

// Per-entry partials of the loss above. d_p[i] pairs with g_p[i], d_q[j] with
// g_q[j]; the 1/n and 1/m mean factors are included.
void balancing_loss_grad(const std::vector<double>& g_p,
                         const std::vector<double>& g_q, double alpha,
                         std::vector<double>& d_p, std::vector<double>& d_q);

// Mixture generalization used by the K-sample trainer. One ratio vector per
// sample; the entry at numerator_index supplies the g^{-1/2} term and every
// vector contributes its weighted g^{1/2} term. Weights must be nonnegative
// and sum to 1 within 1e-12. The two-sample functions above delegate here
// with weights {alpha, 1-alpha}, so the reductions are bit-identical.
double balancing_loss_k(const std::vector<std::vector<double>>& g_per_sample,
                        std::size_t numerator_index,
                        const std::vector<double>& weights);

std::vector<std::vector<double>> balancing_loss_k_grad(
    const std::vector<std::vector<double>>& g_per_sample,
    std::size_t numerator_index, const std::vector<double>& weights);

// Bounded relative ratio from a plain ratio: 2g/(g+1), mapping [0, inf) onto
// [0, 2). Infinite g maps to 2.
double rdr_from_dr(double g);

// Inverse map r/(2-r); r must lie in [0, 2).
double dr_from_rdr(double r);

// Variational objectives for the two other f-divergences. `value` is the
// negated empirical criterion (lower is better, matching the trainer's
// minimization convention); `clamped` reports that an exponent was truncated
// to dodge overflow.
struct VariationalReport {
  double value = 0.0;
  bool clamped = false;
};

// -( mean_P f - mean_Q e^{f-1} ); exponents above 699 are truncated.
VariationalReport kl_variational_loss(const std::vector<double>& f_p,
                                      const std::vector<double>& f_q);

// -( mean_P f - mean_Q (f^2/4 + f) ).
VariationalReport chisq_variational_loss(const std::vector<double>& f_p,
                                         const std::vector<double>& f_q);

// Ratio recovery from an optimal critic: e^{f-1} for the KL form,
// f/2 + 1 for the chi-squared form.
double kl_ratio_from_f(double f);
double chisq_ratio_from_f(double f);

}  // namespace rdr
