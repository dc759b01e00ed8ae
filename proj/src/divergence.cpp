#include "divergence.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rdr {

namespace {

void require_positive_ratios(const std::vector<double>& g, const char* name) {
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(g[i] > 0.0) || !std::isfinite(g[i])) {
      throw DomainError(std::string("balancing_loss: ") + name + "[" +
                        std::to_string(i) + "] = " + std::to_string(g[i]) +
                        " (must be finite and > 0)");
    }
  }
}

double mean_pow(const std::vector<double>& g, double e) {
  double acc = 0.0;
  for (double v : g) acc += std::pow(v, e);
  return acc / static_cast<double>(g.size());
}

}  // namespace

double hellinger_cap(double alpha) { return 1.0 - std::sqrt(alpha); }

void require_mixture_weight(double alpha) {
  if (!std::isfinite(alpha) || alpha < 0.0 || alpha >= 1.0) {
    throw DomainError("mixture weight must lie in [0, 1), got " + std::to_string(alpha));
  }
}

double balancing_loss_k(const std::vector<std::vector<double>>& g_per_sample,
                        std::size_t numerator_index,
                        const std::vector<double>& weights) {
  if (g_per_sample.empty() || g_per_sample.size() != weights.size()) {
    throw ShapeError("balancing_loss: " + std::to_string(g_per_sample.size()) +
                     " samples but " + std::to_string(weights.size()) + " weights");
  }
  if (numerator_index >= g_per_sample.size()) {
    throw ShapeError("balancing_loss: numerator index " + std::to_string(numerator_index) +
                     " out of range");
  }
  double wsum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw DomainError("balancing_loss: negative mixture weight");
    wsum += w;
  }
  if (std::fabs(wsum - 1.0) > 1e-12) {
    throw DomainError("balancing_loss: mixture weights sum to " + std::to_string(wsum));
  }
  for (std::size_t s = 0; s < g_per_sample.size(); ++s) {
    if (g_per_sample[s].empty()) {
      throw ShapeError("balancing_loss: sample " + std::to_string(s) + " is empty");
    }
    require_positive_ratios(g_per_sample[s], s == numerator_index ? "g_at_p" : "g_at_q");
  }
  double denom = 0.0;
  for (std::size_t s = 0; s < g_per_sample.size(); ++s) {
    denom += weights[s] * mean_pow(g_per_sample[s], 0.5);
  }
  return 0.5 * mean_pow(g_per_sample[numerator_index], -0.5) + 0.5 * denom;
}

std::vector<std::vector<double>> balancing_loss_k_grad(
    const std::vector<std::vector<double>>& g_per_sample,
    std::size_t numerator_index, const std::vector<double>& weights) {
  // Reuse the value path's validation.
  (void)balancing_loss_k(g_per_sample, numerator_index, weights);
  std::vector<std::vector<double>> grads(g_per_sample.size());
  for (std::size_t s = 0; s < g_per_sample.size(); ++s) {
    const auto& g = g_per_sample[s];
    const double inv_n = 1.0 / static_cast<double>(g.size());
    grads[s].resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      double d = weights[s] * 0.25 * std::pow(g[i], -0.5);
      if (s == numerator_index) d += -0.25 * std::pow(g[i], -1.5);
      grads[s][i] = inv_n * d;
    }
  }
  return grads;
}

LossReport balancing_loss(const std::vector<double>& g_p,
                          const std::vector<double>& g_q, double alpha) {
  require_mixture_weight(alpha);
  LossReport rep;
  rep.loss = balancing_loss_k({g_p, g_q}, 0, {alpha, 1.0 - alpha});
  rep.h2_raw = 1.0 - rep.loss;
  rep.h2_clipped = std::clamp(rep.h2_raw, 0.0, hellinger_cap(alpha));
  rep.n_p = g_p.size();
  rep.n_q = g_q.size();
  return rep;
}

void balancing_loss_grad(const std::vector<double>& g_p,
                         const std::vector<double>& g_q, double alpha,
                         std::vector<double>& d_p, std::vector<double>& d_q) {
  require_mixture_weight(alpha);
  auto grads = balancing_loss_k_grad({g_p, g_q}, 0, {alpha, 1.0 - alpha});
  d_p = std::move(grads[0]);
  d_q = std::move(grads[1]);
}

double rdr_from_dr(double g) {
  if (!(g >= 0.0)) throw DomainError("rdr_from_dr: ratio must be >= 0, got " + std::to_string(g));
  if (std::isinf(g)) return 2.0;
  return 2.0 * g / (g + 1.0);
}

double dr_from_rdr(double r) {
  if (!(r >= 0.0) || r >= 2.0) {
    throw DomainError("dr_from_rdr: relative ratio must lie in [0, 2), got " + std::to_string(r));
  }
  return r / (2.0 - r);
}

VariationalReport kl_variational_loss(const std::vector<double>& f_p,
                                      const std::vector<double>& f_q) {
  if (f_p.empty() || f_q.empty()) throw ShapeError("kl_variational_loss: empty sample");
  VariationalReport rep;
  double mp = 0.0;
  for (double f : f_p) mp += f;
  mp /= static_cast<double>(f_p.size());
  double mq = 0.0;
  for (double f : f_q) {
    double e = f - 1.0;
    if (e > 699.0) {
      e = 699.0;
      rep.clamped = true;
    }
    mq += std::exp(e);
  }
  mq /= static_cast<double>(f_q.size());
  rep.value = -(mp - mq);
  return rep;
}

VariationalReport chisq_variational_loss(const std::vector<double>& f_p,
                                         const std::vector<double>& f_q) {
  if (f_p.empty() || f_q.empty()) throw ShapeError("chisq_variational_loss: empty sample");
  VariationalReport rep;
  double mp = 0.0;
  for (double f : f_p) mp += f;
  mp /= static_cast<double>(f_p.size());
  double mq = 0.0;
  for (double f : f_q) mq += f * f / 4.0 + f;
  mq /= static_cast<double>(f_q.size());
  rep.value = -(mp - mq);
  return rep;
}

double kl_ratio_from_f(double f) { return std::exp(f - 1.0); }

double chisq_ratio_from_f(double f) { return f / 2.0 + 1.0; }

}  // namespace rdr
