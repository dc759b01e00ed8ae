#include "synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace rdr {

std::string beta_case_name(BetaCase c) {
  switch (c) {
    case BetaCase::partial_precision: return "partial_precision";
    case BetaCase::partial_recall: return "partial_recall";
    case BetaCase::mode_reweight: return "mode_reweight";
  }
  throw DomainError("unknown beta case value");
}

BetaCase beta_case_from_name(const std::string& name) {
  if (name == "partial_precision") return BetaCase::partial_precision;
  if (name == "partial_recall") return BetaCase::partial_recall;
  if (name == "mode_reweight") return BetaCase::mode_reweight;
  throw ParseError("unknown beta case: " + name);
}

Scenario Scenario::gauss_shift(double delta) {
  if (!std::isfinite(delta))
    throw DomainError("gauss_shift delta must be finite");
  Scenario s;
  s.kind = Kind::gauss_shift;
  s.delta = delta;
  return s;
}

Scenario Scenario::beta_mixture(BetaCase c) {
  Scenario s;
  s.kind = Kind::beta_mixture;
  s.beta_case = c;
  return s;
}

namespace {

struct BetaComponent {
  double weight, a, b;
  double log_norm;  // log Beta(a, b)
};

BetaComponent component(double weight, double a, double b) {
  return {weight, a, b,
          std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b)};
}

// The three-mode p density shared by partial_precision and mode_reweight.
const std::vector<BetaComponent>& three_mode() {
  static const std::vector<BetaComponent> v = {component(1.0 / 3.0, 5.0, 45.0),
                                               component(1.0 / 3.0, 25.0, 25.0),
                                               component(1.0 / 3.0, 45.0, 5.0)};
  return v;
}

const std::vector<BetaComponent>& two_mode() {
  static const std::vector<BetaComponent> v = {component(0.5, 5.0, 45.0),
                                               component(0.5, 25.0, 25.0)};
  return v;
}

const std::vector<BetaComponent>& reweighted() {
  static const std::vector<BetaComponent> v = {component(0.6, 2.0, 48.0),
                                               component(0.3, 25.0, 25.0),
                                               component(0.1, 48.0, 2.0)};
  return v;
}

const std::vector<BetaComponent>& p_components(BetaCase c) {
  return c == BetaCase::partial_recall ? two_mode() : three_mode();
}

const std::vector<BetaComponent>& q_components(BetaCase c) {
  switch (c) {
    case BetaCase::partial_precision: return two_mode();
    case BetaCase::partial_recall: return three_mode();
    case BetaCase::mode_reweight: return reweighted();
  }
  throw DomainError("unknown beta case value");
}

double beta_pdf(const BetaComponent& c, double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  return std::exp((c.a - 1.0) * std::log(x) + (c.b - 1.0) * std::log1p(-x) -
                  c.log_norm);
}

double mixture_pdf(const std::vector<BetaComponent>& comps, double x) {
  double acc = 0.0;
  for (const BetaComponent& c : comps) acc += c.weight * beta_pdf(c, x);
  return acc;
}

constexpr double inv_sqrt_2pi = 0.3989422804014327;

double gauss_pdf(double x, double mu) {
  const double d = x - mu;
  return inv_sqrt_2pi * std::exp(-0.5 * d * d);
}

// Marsaglia-Tsang squeeze; every shape used here is >= 1.
double gamma_draw(double shape, RngState& rng) {
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / (3.0 * std::sqrt(d));
  for (;;) {
    double x, v;
    do {
      x = rng.next_normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.next_uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double beta_draw(double a, double b, RngState& rng) {
  const double x = gamma_draw(a, rng);
  const double y = gamma_draw(b, rng);
  return x / (x + y);
}

double mixture_draw(const std::vector<BetaComponent>& comps, RngState& rng) {
  const double u = rng.next_uniform();
  double acc = 0.0;
  for (const BetaComponent& c : comps) {
    acc += c.weight;
    if (u < acc) return beta_draw(c.a, c.b, rng);
  }
  return beta_draw(comps.back().a, comps.back().b, rng);
}

double draw_p(const Scenario& s, RngState& rng) {
  if (s.kind == Scenario::Kind::gauss_shift) return rng.next_normal();
  return mixture_draw(p_components(s.beta_case), rng);
}

double draw_q(const Scenario& s, RngState& rng) {
  if (s.kind == Scenario::Kind::gauss_shift) return s.delta + rng.next_normal();
  return mixture_draw(q_components(s.beta_case), rng);
}

}  // namespace

QuadratureGrid scenario_grid(const Scenario& s) {
  QuadratureGrid g;
  if (s.kind == Scenario::Kind::gauss_shift) {
    g.lo = -12.0 + std::min(0.0, s.delta);
    g.hi = 12.0 + std::max(0.0, s.delta);
    g.points = 100000;
  } else {
    // The steep Beta(2,48)/Beta(48,2) edges need a finer step than the
    // Gaussian grid to keep the trapezoid normalization error under 1e-8.
    g.lo = 1e-9;
    g.hi = 1.0 - 1e-9;
    g.points = 200001;
  }
  return g;
}

double trapezoid(const QuadratureGrid& grid,
                 const std::function<double(double)>& f) {
  if (grid.points < 2) throw DomainError("trapezoid needs at least 2 points");
  if (!(grid.lo < grid.hi)) throw DomainError("trapezoid needs lo < hi");
  const double dx =
      (grid.hi - grid.lo) / static_cast<double>(grid.points - 1);
  double acc = 0.0;
  double prev = f(grid.lo);
  for (std::size_t k = 1; k < grid.points; ++k) {
    const double x = grid.lo + static_cast<double>(k) * dx;
    const double cur = f(x);
    acc += 0.5 * (prev + cur) * dx;
    prev = cur;
  }
  return acc;
}

std::pair<Matrix, Matrix> sample(const Scenario& s, std::size_t n_p,
                                 std::size_t n_q, RngState& rng) {
  if (n_p < 1 || n_q < 1) throw DomainError("sample counts must be at least 1");
  Matrix xp(n_p, 1), xq(n_q, 1);
  xp.column_names = {"x"};
  xq.column_names = {"x"};
  for (std::size_t i = 0; i < n_p; ++i) xp.at(i, 0) = draw_p(s, rng);
  for (std::size_t j = 0; j < n_q; ++j) xq.at(j, 0) = draw_q(s, rng);
  return {std::move(xp), std::move(xq)};
}

double density_p(const Scenario& s, double x) {
  if (!std::isfinite(x)) throw DomainError("density_p: x must be finite");
  if (s.kind == Scenario::Kind::gauss_shift) return gauss_pdf(x, 0.0);
  return mixture_pdf(p_components(s.beta_case), x);
}

double density_q(const Scenario& s, double x) {
  if (!std::isfinite(x)) throw DomainError("density_q: x must be finite");
  if (s.kind == Scenario::Kind::gauss_shift) return gauss_pdf(x, s.delta);
  return mixture_pdf(q_components(s.beta_case), x);
}

double analytic_rdr(const Scenario& s, double x) {
  if (!std::isfinite(x)) throw DomainError("analytic_rdr: x must be finite");
  if (s.kind == Scenario::Kind::gauss_shift)
    return 2.0 / (1.0 + std::exp(s.delta * x - 0.5 * s.delta * s.delta));
  const double p = density_p(s, x);
  const double q = density_q(s, x);
  if (p + q <= 0.0)
    throw DomainError("analytic_rdr: p(x) + q(x) = 0 at x = " +
                      std::to_string(x));
  return 2.0 * p / (p + q);
}

double analytic_dr(const Scenario& s, double x) {
  if (!std::isfinite(x)) throw DomainError("analytic_dr: x must be finite");
  if (s.kind == Scenario::Kind::gauss_shift)
    return std::exp(0.5 * s.delta * s.delta - s.delta * x);
  const double q = density_q(s, x);
  if (q <= 0.0)
    throw DomainError("analytic_dr: q(x) = 0 at x = " + std::to_string(x));
  return density_p(s, x) / q;
}

double quadrature_h2(const Scenario& s, Denominator den) {
  const QuadratureGrid grid = scenario_grid(s);
  const double overlap = trapezoid(grid, [&](double x) {
    const double p = density_p(s, x);
    const double d = den == Denominator::q
                         ? density_q(s, x)
                         : 0.5 * (p + density_q(s, x));
    return std::sqrt(p * d);
  });
  return 1.0 - overlap;
}

double quadrature_balancing_loss(const Scenario& s, double alpha,
                                 const std::function<double(double)>& g) {
  require_mixture_weight(alpha);
  const QuadratureGrid grid = scenario_grid(s);
  return trapezoid(grid, [&](double x) {
    const double p = density_p(s, x);
    const double q = density_q(s, x);
    const double gx = g(x);
    if (std::isnan(gx) || gx < 0.0)
      throw DomainError("quadrature_balancing_loss: g(x) = " +
                        std::to_string(gx) + " at x = " + std::to_string(x));
    const double mix = alpha * p + (1.0 - alpha) * q;
    double acc = 0.0;
    if (p > 0.0) acc += 0.5 * p * std::pow(gx, -0.5);
    if (mix > 0.0) acc += 0.5 * mix * std::sqrt(gx);
    return acc;
  });
}

double pushforward_h2(const Scenario& s, const TrainedRatio& model,
                      std::size_t n_mc, std::size_t bins, RngState& rng) {
  if (model.spec.input_dim != 1)
    throw ShapeError("pushforward_h2 needs a 1D model, input_dim is " +
                     std::to_string(model.spec.input_dim));
  if (model.meta.mode != "rdr")
    throw DomainError("pushforward_h2 needs an rdr-mode model, got " +
                      model.meta.mode);
  if (n_mc < 1) throw DomainError("n_mc must be at least 1");
  if (bins < 2) throw DomainError("bins must be at least 2");

  Matrix from_p(n_mc, 1), from_mix(n_mc, 1);
  for (std::size_t i = 0; i < n_mc; ++i) from_p.at(i, 0) = draw_p(s, rng);
  for (std::size_t i = 0; i < n_mc; ++i)
    from_mix.at(i, 0) =
        rng.next_uniform() < 0.5 ? draw_p(s, rng) : draw_q(s, rng);

  const ScoreSet sp = evaluate(model, from_p, SourceLabel::real);
  const ScoreSet sm = evaluate(model, from_mix, SourceLabel::other);

  std::vector<double> fp(bins, 0.0), fm(bins, 0.0);
  const auto tally = [&](const std::vector<double>& scores,
                         std::vector<double>& hist) {
    for (const double v : scores) {
      auto idx = static_cast<std::size_t>(
          std::max(0.0, v * static_cast<double>(bins) / 2.0));
      if (idx >= bins) idx = bins - 1;
      hist[idx] += 1.0;
    }
    for (double& h : hist) h /= static_cast<double>(n_mc);
  };
  tally(sp.scores, fp);
  tally(sm.scores, fm);

  double overlap = 0.0;
  for (std::size_t i = 0; i < bins; ++i) overlap += std::sqrt(fp[i] * fm[i]);
  return std::max(0.0, 1.0 - overlap);
}

}  // namespace rdr
