#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <utility>

#include "errors.hpp"
#include "estimator.hpp"
#include "numerics.hpp"

namespace rdr {

// Three qualitative two-sample regimes on [0, 1] built from Beta mixtures:
// partial_precision keeps every q mode inside p but p carries an extra mode,
// partial_recall is the same pair with the roles swapped, and mode_reweight
// shifts one q mode and changes the component weights.
enum class BetaCase { partial_precision, partial_recall, mode_reweight };

std::string beta_case_name(BetaCase c);
BetaCase beta_case_from_name(const std::string& name);

// A closed-form 1D benchmark: either N(0,1) vs N(delta,1) or one of the Beta
// mixture cases. Densities, ratios, samplers and quadrature oracles all come
// from the same definition.
struct Scenario {
  enum class Kind { gauss_shift, beta_mixture };
  Kind kind = Kind::gauss_shift;
  double delta = 0.0;
  BetaCase beta_case = BetaCase::partial_precision;

  static Scenario gauss_shift(double delta);
  static Scenario beta_mixture(BetaCase c);
};

// Trapezoid-rule grid covering all but a negligible sliver of both densities'
// mass: [-12, 12 + delta] for the Gaussian pair (12 sigma tails), the open
// unit interval clipped at 1e-9 for the Beta cases.
struct QuadratureGrid {
  double lo = 0.0;
  double hi = 1.0;
  std::size_t points = 100000;
};

QuadratureGrid scenario_grid(const Scenario& s);

// Composite trapezoid rule over the grid, accumulated left to right.
double trapezoid(const QuadratureGrid& grid,
                 const std::function<double(double)>& f);

// Exact draws: Box-Muller normals for the Gaussian pair; Beta components via
// the Marsaglia-Tsang gamma squeeze, mixtures by categorical-then-component.
// Fills xp then xq from the one stream, so a fixed seed reproduces both.
std::pair<Matrix, Matrix> sample(const Scenario& s, std::size_t n_p,
                                 std::size_t n_q, RngState& rng);

double density_p(const Scenario& s, double x);
double density_q(const Scenario& s, double x);

// r = 2p/(p+q), computed as 2/(1 + exp(delta x - delta^2/2)) for the
// Gaussian pair which is exact for every finite x.
double analytic_rdr(const Scenario& s, double x);

// g = p/q; exp(delta^2/2 - delta x) for the Gaussian pair.
double analytic_dr(const Scenario& s, double x);

enum class Denominator { q, mixture };

// H^2 = 1 - integral of sqrt(p * den) with den = q or (p+q)/2.
double quadrature_h2(const Scenario& s, Denominator den);

// Population balancing loss of a candidate ratio function g(x) by quadrature:
// integral of p g^{-1/2}/2 + (alpha p + (1-alpha) q) g^{1/2}/2. Zero-density
// points contribute nothing, so a divergent g on a null set stays harmless.
// Plugging the minimizer in gives 1 - quadrature_h2 back (the duality).
double quadrature_balancing_loss(const Scenario& s, double alpha,
                                 const std::function<double(double)>& g);

// Discrete H^2 between the score histograms of n_mc draws from P and n_mc
// draws from the even mixture, both scored by the model and binned on [0, 2].
double pushforward_h2(const Scenario& s, const TrainedRatio& model,
                      std::size_t n_mc, std::size_t bins, RngState& rng);

}  // namespace rdr
