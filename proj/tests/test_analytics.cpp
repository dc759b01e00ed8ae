#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "analytics.hpp"

using namespace rdr;

namespace {

ScoreSet make_scores(std::vector<double> values,
                     SourceLabel label = SourceLabel::other) {
  ScoreSet s;
  s.scores = std::move(values);
  s.label = label;
  s.model_id = "test";
  return s;
}

// Rank helper written independently of the library path: plain sort walk.
std::vector<double> oracle_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    double sum = static_cast<double>(i + 1);
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) {
      ++j;
      sum += static_cast<double>(j + 1);
    }
    const double mean_rank = sum / static_cast<double>(j - i + 1);
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = mean_rank;
    i = j + 1;
  }
  return ranks;
}

// Tie-corrected Spearman through the classic sum-of-squared-rank-differences
// route, a different formula from the Pearson-of-ranks the library uses.
double oracle_spearman(const std::vector<double>& x,
                       const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const std::vector<double> rx = oracle_ranks(x);
  const std::vector<double> ry = oracle_ranks(y);
  double d2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = rx[i] - ry[i];
    d2 += d * d;
  }
  const auto tie_term = [](const std::vector<double>& v) {
    std::vector<double> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    double total = 0.0;
    std::size_t i = 0;
    while (i < sorted.size()) {
      std::size_t j = i;
      while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
      const double t = static_cast<double>(j - i + 1);
      total += (t * t * t - t) / 12.0;
      i = j + 1;
    }
    return total;
  };
  const double a = n * (n * n - 1.0) / 12.0 - tie_term(x);
  const double b = n * (n * n - 1.0) / 12.0 - tie_term(y);
  return (a + b - d2) / (2.0 * std::sqrt(a * b));
}

// Student-t upper tail by direct quadrature of the density, normalized with
// lgamma. Independent of the distribution library the implementation uses.
double oracle_t_two_sided(double t, double df) {
  const double half = 0.5 * (df + 1.0);
  const double log_norm = std::lgamma(half) - std::lgamma(0.5 * df) -
                          0.5 * std::log(df * std::acos(-1.0));
  const auto pdf = [&](double u) {
    return std::exp(log_norm - half * std::log1p(u * u / df));
  };
  const double lo = std::fabs(t);
  const double hi = lo + 120.0;
  const std::size_t steps = 400000;
  const double h = (hi - lo) / static_cast<double>(steps);
  double acc = 0.5 * (pdf(lo) + pdf(hi));
  for (std::size_t k = 1; k < steps; ++k) {
    acc += pdf(lo + static_cast<double>(k) * h);
  }
  return 2.0 * acc * h;
}

// Plain gradient ascent on the same log-likelihood; converges to the MLE that
// the ridged Newton iteration also targets.
std::vector<double> oracle_logistic(const Matrix& cov,
                                    const std::vector<double>& y, double lr,
                                    std::size_t max_iters) {
  const std::size_t n = cov.n_rows;
  const std::size_t d = cov.n_cols + 1;
  std::vector<double> beta(d, 0.0);
  std::vector<double> g(d, 0.0);
  for (std::size_t it = 0; it < max_iters; ++it) {
    std::fill(g.begin(), g.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double eta = beta[0];
      for (std::size_t j = 0; j < cov.n_cols; ++j) {
        eta += cov.at(i, j) * beta[j + 1];
      }
      const double r = y[i] - 1.0 / (1.0 + std::exp(-eta));
      g[0] += r;
      for (std::size_t j = 0; j < cov.n_cols; ++j) g[j + 1] += cov.at(i, j) * r;
    }
    double biggest = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      beta[j] += lr * g[j];
      biggest = std::max(biggest, std::fabs(g[j]));
    }
    if (biggest < 1e-12) break;
  }
  return beta;
}

Matrix random_composition(std::uint64_t seed, std::size_t rows,
                          std::size_t cols) {
  RngState rng(seed);
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    double total = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      m.at(i, j) = 0.05 + rng.next_uniform();
      total += m.at(i, j);
    }
    for (std::size_t j = 0; j < cols; ++j) m.at(i, j) /= total;
  }
  for (std::size_t j = 0; j < cols; ++j) {
    m.column_names.push_back("t" + std::to_string(j));
  }
  return m;
}

}  // namespace

TEST_CASE("histogram places values and keeps every observation") {
  const Histogram h = histogram({make_scores({0.5, 1.5}, SourceLabel::real)},
                                2, 0.0, 2.0);
  REQUIRE(h.edges.size() == 3);
  CHECK(h.edges[0] == 0.0);
  CHECK(h.edges[1] == 1.0);
  CHECK(h.edges[2] == 2.0);
  REQUIRE(h.series.size() == 1);
  CHECK(h.series[0].label == "real");
  CHECK(h.series[0].counts == std::vector<std::size_t>{1, 1});

  // Interior edges belong to the upper bin, the top edge to the last bin.
  const Histogram edges = histogram(
      {make_scores({0.0, 1.0, 2.0}, SourceLabel::generated)}, 2, 0.0, 2.0);
  CHECK(edges.series[0].counts == std::vector<std::size_t>{1, 2});

  const double inf = std::numeric_limits<double>::infinity();
  const Histogram spill = histogram(
      {make_scores({-0.1, 0.4, 2.5, inf, -inf}, SourceLabel::other)}, 4, 0.0,
      2.0);
  REQUIRE(spill.series.size() == 1);
  CHECK(spill.series[0].underflow == 2);
  CHECK(spill.series[0].overflow == 2);
  std::size_t in_range = 0;
  for (const std::size_t c : spill.series[0].counts) in_range += c;
  CHECK(in_range + spill.series[0].underflow + spill.series[0].overflow == 5);
}

TEST_CASE("histogram merges same-labeled sets and orders series") {
  const Histogram h = histogram(
      {make_scores({0.1}, SourceLabel::other),
       make_scores({0.2, 0.3}, SourceLabel::real),
       make_scores({0.4}, SourceLabel::real)},
      1, 0.0, 2.0);
  REQUIRE(h.series.size() == 2);
  CHECK(h.series[0].label == "real");
  CHECK(h.series[0].counts[0] == 3);
  CHECK(h.series[1].label == "other");
  CHECK(h.series[1].counts[0] == 1);
}

TEST_CASE("histogram of uniform draws stays within binomial deviations") {
  RngState rng(99);
  std::vector<double> draws(100000);
  for (double& v : draws) v = 2.0 * rng.next_uniform();
  const Histogram h =
      histogram({make_scores(std::move(draws), SourceLabel::real)}, 20, 0.0,
                2.0);
  REQUIRE(h.series.size() == 1);
  const double bound = 4.0 * std::sqrt(5000.0);
  for (const std::size_t c : h.series[0].counts) {
    CHECK(std::fabs(static_cast<double>(c) - 5000.0) <= bound);
  }
  // Densities integrate to one over the covered range.
  double mass = 0.0;
  for (const double d : h.series[0].density) mass += d * 0.1;
  CHECK(std::fabs(mass - 1.0) <= 1e-12);
}

TEST_CASE("histogram rejects bad configuration") {
  CHECK_THROWS_AS(histogram({make_scores({0.5})}, 0, 0.0, 2.0), DomainError);
  CHECK_THROWS_AS(histogram({make_scores({0.5})}, 4, 2.0, 2.0), DomainError);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(histogram({make_scores({nan})}, 4, 0.0, 2.0), DomainError);
}

TEST_CASE("summarize matches hand-computed statistics") {
  const SummaryStats st = summarize(make_scores({4.0, 1.0, 3.0, 2.0}));
  CHECK(st.length == 4);
  CHECK(st.mean == 2.5);
  CHECK(std::fabs(st.std_dev - std::sqrt(5.0 / 3.0)) <= 1e-15);
  CHECK(st.min == 1.0);
  CHECK(st.q1 == 1.75);
  CHECK(st.median == 2.5);
  CHECK(st.q3 == 3.25);
  CHECK(st.max == 4.0);

  const SummaryStats one = summarize(make_scores({7.0}));
  CHECK(one.length == 1);
  CHECK(one.std_dev == 0.0);
  CHECK(one.q1 == 7.0);
  CHECK(one.median == 7.0);
  CHECK(one.q3 == 7.0);
}

TEST_CASE("summary quantiles are ordered on random inputs") {
  RngState rng(2024);
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng.next_u64() % 50);
    std::vector<double> v(n);
    for (double& x : v) x = rng.next_normal();
    const SummaryStats st = summarize(make_scores(v));
    CHECK(st.min <= st.q1);
    CHECK(st.q1 <= st.median);
    CHECK(st.median <= st.q3);
    CHECK(st.q3 <= st.max);
    CHECK(st.min <= st.mean);
    CHECK(st.mean <= st.max);
  }
}

TEST_CASE("summarize rejects empty and non-finite input") {
  CHECK_THROWS_AS(summarize(make_scores({})), DomainError);
  CHECK_THROWS_AS(
      summarize(make_scores({1.0, std::numeric_limits<double>::infinity()})),
      DomainError);
}

TEST_CASE("stratified summary groups by label in lexicographic order") {
  const ScoreSet s = make_scores({1.0, 2.0, 3.0, 4.0, 5.0, 6.0});
  const std::vector<std::string> labels = {"b", "a", "b", "a", "b", "a"};
  const auto by_label = stratified_summary(s, labels);
  REQUIRE(by_label.size() == 2);
  auto it = by_label.begin();
  CHECK(it->first == "a");
  CHECK(it->second.length == 3);
  CHECK(it->second.mean == 4.0);
  ++it;
  CHECK(it->first == "b");
  CHECK(it->second.mean == 3.0);

  CHECK_THROWS_AS(stratified_summary(s, {"a", "b"}), ShapeError);
}

TEST_CASE("logistic attribution is exactly zero under paired symmetry") {
  // Every covariate value appears once with a high score and once with a low
  // one, so beta = 0 solves the score equations exactly.
  const std::vector<double> xs = {-1.5, -0.5, 0.5, 1.5};
  Matrix cov(8, 1);
  std::vector<double> scores(8);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    cov.at(2 * i, 0) = xs[i];
    cov.at(2 * i + 1, 0) = xs[i];
    scores[2 * i] = 1.5;
    scores[2 * i + 1] = 0.5;
  }
  const AttributionReport rep =
      logistic_attribution(make_scores(scores), cov, 1.0);
  CHECK(rep.converged);
  CHECK(rep.iterations == 1);
  CHECK(rep.intercept.coef == 0.0);
  REQUIRE(rep.covariates.size() == 1);
  CHECK(rep.covariates[0].coef == 0.0);
  CHECK(rep.covariates[0].z == 0.0);
  CHECK(rep.covariates[0].p_value == 1.0);
  CHECK_FALSE(rep.separation);
}

TEST_CASE("logistic attribution recovers planted coefficients") {
  RngState rng(314);
  const std::size_t n = 10000;
  Matrix cov(n, 3);
  cov.column_names = {"signal", "noise_a", "noise_b"};
  std::vector<double> scores(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.next_normal();
    cov.at(i, 0) = x;
    cov.at(i, 1) = rng.next_normal();
    cov.at(i, 2) = rng.next_normal();
    const double p = 1.0 / (1.0 + std::exp(-(0.5 + 1.2 * x)));
    scores[i] = rng.next_uniform() < p ? 2.0 : 0.0;
  }
  const AttributionReport rep =
      logistic_attribution(make_scores(scores), cov, 1.0);
  CHECK(rep.converged);
  CHECK_FALSE(rep.separation);

  REQUIRE(rep.covariates.size() == 3);
  // Rows ascend in p-value, so the planted signal must come first.
  CHECK(rep.covariates[0].name == "signal");
  CHECK(rep.covariates[0].p_value <= rep.covariates[1].p_value);
  CHECK(rep.covariates[1].p_value <= rep.covariates[2].p_value);
  CHECK(rep.covariates[0].p_value < 1e-10);

  const AttributionRow& signal = rep.covariates[0];
  CHECK(signal.std_error > 0.0);
  CHECK(std::fabs(signal.coef - 1.2) <= 3.0 * signal.std_error);
  CHECK(std::fabs(rep.intercept.coef - 0.5) <= 3.0 * rep.intercept.std_error);
  for (const AttributionRow& row : rep.covariates) {
    if (row.name == "signal") continue;
    CHECK(std::fabs(row.coef) <= 4.0 * row.std_error);
  }
}

TEST_CASE("logistic attribution matches a gradient-ascent oracle") {
  RngState rng(2718);
  const std::size_t n = 150;
  Matrix cov(n, 1);
  std::vector<double> scores(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.next_normal();
    cov.at(i, 0) = x;
    const double p = 1.0 / (1.0 + std::exp(-(0.3 - 0.8 * x)));
    scores[i] = rng.next_uniform() < p ? 1.4 : 0.6;
  }
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = scores[i] > 1.0 ? 1.0 : 0.0;

  const AttributionReport rep =
      logistic_attribution(make_scores(scores), cov, 1.0);
  const std::vector<double> oracle = oracle_logistic(cov, y, 0.01, 2000000);
  CHECK(std::fabs(rep.intercept.coef - oracle[0]) <= 1e-5);
  REQUIRE(rep.covariates.size() == 1);
  CHECK(std::fabs(rep.covariates[0].coef - oracle[1]) <= 1e-5);
}

TEST_CASE("logistic attribution is invariant to row order") {
  RngState rng(55);
  const std::size_t n = 400;
  Matrix cov(n, 2);
  std::vector<double> scores(n);
  for (std::size_t i = 0; i < n; ++i) {
    cov.at(i, 0) = rng.next_normal();
    cov.at(i, 1) = rng.next_normal();
    scores[i] = rng.next_uniform() < 0.5 ? 1.7 : 0.2;
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = n - 1; i > 0; --i) {
    std::swap(perm[i], perm[rng.next_u64() % (i + 1)]);
  }
  Matrix shuffled_cov(n, 2);
  std::vector<double> shuffled_scores(n);
  for (std::size_t i = 0; i < n; ++i) {
    shuffled_cov.at(i, 0) = cov.at(perm[i], 0);
    shuffled_cov.at(i, 1) = cov.at(perm[i], 1);
    shuffled_scores[i] = scores[perm[i]];
  }
  const AttributionReport a =
      logistic_attribution(make_scores(scores), cov, 1.0);
  const AttributionReport b =
      logistic_attribution(make_scores(shuffled_scores), shuffled_cov, 1.0);
  CHECK(std::fabs(a.intercept.coef - b.intercept.coef) <= 1e-9);
  REQUIRE(a.covariates.size() == b.covariates.size());
  for (std::size_t j = 0; j < a.covariates.size(); ++j) {
    CHECK(std::fabs(a.covariates[j].coef - b.covariates[j].coef) <= 1e-9);
  }
}

TEST_CASE("logistic attribution flags perfect separation and clamps") {
  const std::size_t n = 40;
  Matrix cov(n, 1);
  std::vector<double> scores(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = (i < n / 2) ? -1.0 - 0.05 * static_cast<double>(i)
                                 : 1.0 + 0.05 * static_cast<double>(i);
    cov.at(i, 0) = x;
    scores[i] = x > 0.0 ? 2.0 : 0.0;
  }
  const AttributionReport rep =
      logistic_attribution(make_scores(scores), cov, 1.0);
  CHECK(rep.separation);
  REQUIRE(rep.covariates.size() == 1);
  CHECK(std::fabs(rep.covariates[0].coef) <= 30.0);
  CHECK(rep.covariates[0].coef > 0.0);

  // With a tiny covariate scale the walk cannot saturate below the cap, so
  // the clamp itself must engage.
  Matrix narrow(n, 1);
  std::vector<double> narrow_scores(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = (i < n / 2) ? -0.05 : 0.05;
    narrow.at(i, 0) = x + 0.001 * static_cast<double>(i % 7);
    narrow_scores[i] = i < n / 2 ? 0.0 : 2.0;
  }
  const AttributionReport pinned =
      logistic_attribution(make_scores(narrow_scores), narrow, 1.0);
  CHECK(pinned.separation);
  REQUIRE(pinned.covariates.size() == 1);
  CHECK(pinned.covariates[0].coef == 30.0);

  // Overlapping labels can never raise the flag.
  RngState rng(17);
  Matrix mixed(60, 1);
  std::vector<double> mixed_scores(60);
  for (std::size_t i = 0; i < 60; ++i) {
    mixed.at(i, 0) = rng.next_normal();
    mixed_scores[i] = rng.next_uniform() < 0.5 ? 2.0 : 0.0;
  }
  const AttributionReport overlap =
      logistic_attribution(make_scores(mixed_scores), mixed, 1.0);
  CHECK_FALSE(overlap.separation);
}

TEST_CASE("logistic attribution rejects rank-deficient designs by name") {
  RngState rng(8);
  const std::size_t n = 50;
  Matrix cov(n, 2);
  cov.column_names = {"alpha", "beta"};
  std::vector<double> scores(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.next_normal();
    cov.at(i, 0) = x;
    cov.at(i, 1) = 2.0 * x;
    scores[i] = rng.next_uniform() < 0.5 ? 2.0 : 0.0;
  }
  try {
    logistic_attribution(make_scores(scores), cov, 1.0);
    FAIL("expected SingularError");
  } catch (const SingularError& e) {
    CHECK(std::string(e.what()).find("beta") != std::string::npos);
    CHECK(e.column == 2);
  }

  // A constant column collides with the intercept; unnamed columns fall back
  // to positional names.
  Matrix constant(n, 1);
  for (std::size_t i = 0; i < n; ++i) constant.at(i, 0) = 3.0;
  try {
    logistic_attribution(make_scores(scores), constant, 1.0);
    FAIL("expected SingularError");
  } catch (const SingularError& e) {
    CHECK(std::string(e.what()).find("x0") != std::string::npos);
  }
}

TEST_CASE("logistic attribution validates shapes and values") {
  Matrix cov(3, 1);
  CHECK_THROWS_AS(logistic_attribution(make_scores({1.0, 2.0}), cov, 1.0),
                  ShapeError);
  CHECK_THROWS_AS(
      logistic_attribution(make_scores({}), Matrix(0, 1), 1.0), ShapeError);
  CHECK_THROWS_AS(
      logistic_attribution(make_scores({1.0, 2.0, 3.0}), cov,
                           std::numeric_limits<double>::quiet_NaN()),
      DomainError);
  Matrix bad(3, 1);
  bad.at(1, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(logistic_attribution(make_scores({1.0, 2.0, 3.0}), bad, 1.0),
                  DomainError);
}

TEST_CASE("spearman agrees with the tie-corrected rank oracle") {
  RngState rng(123);

  // Distinct values: the classic 1 - 6 sum d^2 / (n(n^2-1)) identity.
  const std::size_t n = 50;
  std::vector<double> x(n);
  std::vector<double> y(n);
  std::iota(x.begin(), x.end(), 1.0);
  std::iota(y.begin(), y.end(), 1.0);
  for (std::size_t i = n - 1; i > 0; --i) {
    std::swap(x[i], x[rng.next_u64() % (i + 1)]);
    std::swap(y[i], y[rng.next_u64() % (i + 1)]);
  }
  double d2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) d2 += (x[i] - y[i]) * (x[i] - y[i]);
  const double nn = static_cast<double>(n);
  const double classic = 1.0 - 6.0 * d2 / (nn * (nn * nn - 1.0));
  const SpearmanResult plain = spearman(x, y);
  CHECK(std::fabs(plain.rho - classic) <= 1e-12);

  // Heavy ties: compare against the correction-term formula.
  std::vector<double> tx(60);
  std::vector<double> ty(60);
  for (std::size_t i = 0; i < 60; ++i) {
    tx[i] = static_cast<double>(rng.next_u64() % 10);
    ty[i] = static_cast<double>(rng.next_u64() % 10);
  }
  const SpearmanResult tied = spearman(tx, ty);
  CHECK(std::fabs(tied.rho - oracle_spearman(tx, ty)) <= 1e-12);
  CHECK(tied.n == 60);
}

TEST_CASE("spearman endpoints and p-values") {
  const SpearmanResult up = spearman({1.0, 2.0, 3.0}, {10.0, 20.0, 30.0});
  CHECK(up.rho == 1.0);
  CHECK(up.p_value == 0.0);
  const SpearmanResult down = spearman({1.0, 2.0, 3.0}, {5.0, 4.0, 3.0});
  CHECK(down.rho == -1.0);
  CHECK(down.p_value == 0.0);

  RngState rng(77);
  std::vector<double> x(20);
  std::vector<double> y(20);
  for (std::size_t i = 0; i < 20; ++i) {
    x[i] = rng.next_normal();
    y[i] = 0.5 * x[i] + rng.next_normal();
  }
  const SpearmanResult r = spearman(x, y);
  REQUIRE(std::fabs(r.rho) < 1.0);
  const double t = r.rho * std::sqrt(18.0 / (1.0 - r.rho * r.rho));
  CHECK(std::fabs(r.p_value - oracle_t_two_sided(t, 18.0)) <= 1e-8);
  CHECK(r.p_value > 0.0);
  CHECK(r.p_value < 1.0);
}

TEST_CASE("spearman is invariant under monotone transforms") {
  RngState rng(31);
  std::vector<double> x(25);
  std::vector<double> y(25);
  for (std::size_t i = 0; i < 25; ++i) {
    x[i] = rng.next_normal();
    y[i] = rng.next_normal() + 0.3 * x[i];
  }
  const SpearmanResult base = spearman(x, y);

  std::vector<double> ex(25);
  std::vector<double> cy(25);
  for (std::size_t i = 0; i < 25; ++i) {
    ex[i] = std::exp(x[i]);
    cy[i] = y[i] * y[i] * y[i];
  }
  const SpearmanResult mapped = spearman(ex, cy);
  CHECK(base.rho == mapped.rho);
  CHECK(base.p_value == mapped.p_value);
}

TEST_CASE("spearman rejects degenerate input") {
  CHECK_THROWS_AS(spearman({1.0, 2.0}, {1.0, 2.0, 3.0}), ShapeError);
  CHECK_THROWS_AS(spearman({1.0, 2.0}, {1.0, 2.0}), DomainError);
  CHECK_THROWS_AS(spearman({2.0, 2.0, 2.0}, {1.0, 2.0, 3.0}), DomainError);
  CHECK_THROWS_AS(spearman({1.0, 2.0, 3.0}, {5.0, 5.0, 5.0}), DomainError);
  CHECK_THROWS_AS(
      spearman({1.0, std::numeric_limits<double>::quiet_NaN(), 3.0},
               {1.0, 2.0, 3.0}),
      DomainError);
}

TEST_CASE("spearman permutation p-value behaves sensibly") {
  RngState a(5);
  std::vector<double> x(12);
  std::vector<double> y(12);
  std::iota(x.begin(), x.end(), 1.0);
  std::iota(y.begin(), y.end(), 1.0);
  const double tiny = spearman_permutation_p(x, y, 400, a);
  CHECK(std::fabs(tiny - 1.0 / 401.0) <= 1e-15);

  RngState b(6);
  RngState c(6);
  std::vector<double> u(12);
  std::vector<double> v(12);
  RngState data(7);
  for (std::size_t i = 0; i < 12; ++i) {
    u[i] = data.next_normal();
    v[i] = data.next_normal();
  }
  const double p1 = spearman_permutation_p(u, v, 400, b);
  const double p2 = spearman_permutation_p(u, v, 400, c);
  CHECK(p1 == p2);
  CHECK(p1 > 0.05);

  std::vector<double> big(31, 0.0);
  std::iota(big.begin(), big.end(), 1.0);
  RngState d(8);
  CHECK_THROWS_AS(spearman_permutation_p(big, big, 100, d), DomainError);
  CHECK_THROWS_AS(spearman_permutation_p(x, y, 0, d), DomainError);
}

TEST_CASE("clr transform matches the hand-computed example") {
  Matrix table(1, 3);
  table.at(0, 0) = 0.5;
  table.at(0, 1) = 0.25;
  table.at(0, 2) = 0.25;
  const Matrix out = clr_transform(table, 0.0);
  const double two_thirds_log2 = 2.0 / 3.0 * std::log(2.0);
  CHECK(std::fabs(out.at(0, 0) - two_thirds_log2) <= 1e-15);
  CHECK(std::fabs(out.at(0, 1) + 0.5 * two_thirds_log2) <= 1e-15);
  CHECK(std::fabs(out.at(0, 2) + 0.5 * two_thirds_log2) <= 1e-15);
  CHECK(std::fabs(out.at(0, 0) - 0.4621) <= 1e-4);
  CHECK(std::fabs(out.at(0, 1) + 0.2310) <= 1e-4);
  CHECK(std::fabs(out.at(0, 2) + 0.2310) <= 1e-4);

  Matrix uniform(1, 3, 1.0 / 3.0);
  const Matrix zeros = clr_transform(uniform, 0.0);
  for (const double v : zeros.data) CHECK(v == 0.0);
}

TEST_CASE("clr rows are centered and names carried through") {
  const Matrix table = random_composition(404, 10, 6);
  const Matrix out = clr_transform(table);
  CHECK(out.column_names == table.column_names);
  for (std::size_t i = 0; i < out.n_rows; ++i) {
    double total = 0.0;
    for (std::size_t j = 0; j < out.n_cols; ++j) total += out.at(i, j);
    CHECK(std::fabs(total) <= 1e-9);
  }
}

TEST_CASE("clr rejects invalid compositions") {
  Matrix negative(1, 3);
  negative.at(0, 0) = -0.1;
  negative.at(0, 1) = 0.6;
  negative.at(0, 2) = 0.5;
  CHECK_THROWS_AS(clr_transform(negative), DomainError);

  Matrix off(1, 2);
  off.at(0, 0) = 0.7;
  off.at(0, 1) = 0.1;
  CHECK_THROWS_AS(clr_transform(off), DomainError);

  Matrix sparse(1, 2);
  sparse.at(0, 0) = 1.0;
  sparse.at(0, 1) = 0.0;
  CHECK_THROWS_AS(clr_transform(sparse, 0.0), DomainError);
  const Matrix rescued = clr_transform(sparse, 1e-6);
  CHECK(rescued.at(0, 0) > 0.0);

  CHECK_THROWS_AS(clr_transform(random_composition(1, 2, 2), -1.0),
                  DomainError);
  CHECK_THROWS_AS(validate_composition(Matrix(0, 0)), ShapeError);
}

TEST_CASE("aggregate_groups sums member columns in place") {
  Matrix table = random_composition(11, 5, 4);
  table.column_names = {"a", "b", "c", "d"};

  const std::map<std::string, std::string> identity = {
      {"a", "a"}, {"b", "b"}, {"c", "c"}, {"d", "d"}};
  const Matrix same = aggregate_groups(table, identity);
  CHECK(same.column_names == table.column_names);
  REQUIRE(same.data.size() == table.data.size());
  for (std::size_t k = 0; k < table.data.size(); ++k) {
    CHECK(same.data[k] == table.data[k]);
  }

  const std::map<std::string, std::string> split = {
      {"a", "g1"}, {"b", "g2"}, {"c", "g1"}, {"d", "g2"}};
  const Matrix grouped = aggregate_groups(table, split);
  REQUIRE(grouped.n_cols == 2);
  CHECK(grouped.column_names == std::vector<std::string>{"g1", "g2"});
  for (std::size_t i = 0; i < table.n_rows; ++i) {
    CHECK(grouped.at(i, 0) == table.at(i, 0) + table.at(i, 2));
    CHECK(grouped.at(i, 1) == table.at(i, 1) + table.at(i, 3));
    const double in_sum =
        table.at(i, 0) + table.at(i, 1) + table.at(i, 2) + table.at(i, 3);
    CHECK(std::fabs(grouped.at(i, 0) + grouped.at(i, 1) - in_sum) <= 1e-12);
  }

  const std::map<std::string, std::string> all = {
      {"a", "all"}, {"b", "all"}, {"c", "all"}, {"d", "all"}};
  const Matrix one = aggregate_groups(table, all);
  REQUIRE(one.n_cols == 1);
  for (std::size_t i = 0; i < one.n_rows; ++i) {
    CHECK(std::fabs(one.at(i, 0) - 1.0) <= 1e-6);
  }
}

TEST_CASE("aggregate_groups rejects unmapped or unnamed columns") {
  Matrix table = random_composition(3, 2, 3);
  table.column_names = {"a", "b", "c"};
  const std::map<std::string, std::string> partial = {{"a", "g"}, {"b", "g"}};
  try {
    aggregate_groups(table, partial);
    FAIL("expected DomainError");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("'c'") != std::string::npos);
  }

  Matrix unnamed = random_composition(5, 2, 3);
  unnamed.column_names.clear();
  CHECK_THROWS_AS(aggregate_groups(unnamed, partial), ShapeError);
}

TEST_CASE("association scan aggregates before transforming") {
  const std::size_t n = 60;
  Matrix table = random_composition(21, n, 3);
  table.column_names = {"a", "b", "c"};
  const std::map<std::string, std::string> mapping = {
      {"a", "g1"}, {"b", "g1"}, {"c", "g2"}};

  // Expected pipeline, spelled out step by step.
  const Matrix grouped = aggregate_groups(table, mapping);
  const Matrix transformed = clr_transform(grouped, 1e-6);
  std::vector<double> scores(n);
  RngState rng(3);
  for (std::size_t i = 0; i < n; ++i) {
    scores[i] = transformed.at(i, 0) + 0.4 * rng.next_normal();
  }
  std::vector<double> g1(n);
  std::vector<double> g2(n);
  for (std::size_t i = 0; i < n; ++i) {
    g1[i] = transformed.at(i, 0);
    g2[i] = transformed.at(i, 1);
  }
  const SpearmanResult want_g1 = spearman(scores, g1);
  const SpearmanResult want_g2 = spearman(scores, g2);

  const auto levels = std::vector<
      std::pair<std::string, std::map<std::string, std::string>>>{
      {"family", mapping}};
  const auto scan =
      association_scan(make_scores(scores), table, levels, 1e-6);
  REQUIRE(scan.size() == 1);
  CHECK(scan[0].level == "family");
  REQUIRE(scan[0].entries.size() == 2);
  CHECK(std::fabs(scan[0].entries[0].rho) >= std::fabs(scan[0].entries[1].rho));
  for (const AssociationEntry& e : scan[0].entries) {
    if (e.group == "g1") {
      CHECK(e.rho == want_g1.rho);
      CHECK(e.p_value == want_g1.p_value);
    } else {
      REQUIRE(e.group == "g2");
      CHECK(e.rho == want_g2.rho);
    }
  }

  // Transforming before aggregation is a different pipeline; the scan must
  // not match it on this table.
  std::vector<double> summed(n);
  const Matrix clr_first = clr_transform(table, 1e-6);
  for (std::size_t i = 0; i < n; ++i) {
    summed[i] = clr_first.at(i, 0) + clr_first.at(i, 1);
  }
  const SpearmanResult alt = spearman(scores, summed);
  CHECK(std::fabs(alt.rho - want_g1.rho) > 1e-6);
}

TEST_CASE("association scan finds a planted group and stays null elsewhere") {
  const std::size_t n = 2000;
  Matrix table = random_composition(77, n, 4);
  const std::map<std::string, std::string> identity = {
      {"t0", "t0"}, {"t1", "t1"}, {"t2", "t2"}, {"t3", "t3"}};
  const Matrix transformed = clr_transform(table, 1e-6);
  std::vector<double> planted(n);
  for (std::size_t i = 0; i < n; ++i) planted[i] = transformed.at(i, 2);

  const auto levels = std::vector<
      std::pair<std::string, std::map<std::string, std::string>>>{
      {"taxon", identity}};
  const auto scan =
      association_scan(make_scores(planted), table, levels, 1e-6);
  REQUIRE(scan.size() == 1);
  REQUIRE(scan[0].entries.size() == 4);
  CHECK(scan[0].entries[0].group == "t2");
  CHECK(scan[0].entries[0].rho == 1.0);
  CHECK(scan[0].entries[0].p_value == 0.0);

  // Independent scores: no column should correlate noticeably.
  RngState rng(88);
  std::vector<double> noise(n);
  for (double& v : noise) v = rng.next_normal();
  const auto null_scan =
      association_scan(make_scores(noise), table, levels, 1e-6);
  for (const AssociationEntry& e : null_scan[0].entries) {
    CHECK(std::fabs(e.rho) <= 0.1);
  }

  CHECK_THROWS_AS(
      association_scan(make_scores({1.0, 2.0}), table, levels, 1e-6),
      ShapeError);
}
