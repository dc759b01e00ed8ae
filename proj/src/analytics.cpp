#include "analytics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

namespace rdr {
namespace {

void require_finite_vector(const std::vector<double>& v, const std::string& what) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      throw DomainError(what + "[" + std::to_string(i) + "] = " +
                        std::to_string(v[i]) + " is not finite");
    }
  }
}

// 1-based ranks with ties sharing the average of the ranks they span.
std::vector<double> average_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double shared = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[idx[t]] = shared;
    i = j + 1;
  }
  return ranks;
}

bool is_constant(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(),
                     [&](double x) { return x == v.front(); });
}

double rank_correlation(const std::vector<double>& x,
                        const std::vector<double>& y) {
  const std::vector<double> rx = average_ranks(x);
  const std::vector<double> ry = average_ranks(y);
  const std::size_t n = x.size();
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = rx[i] - mx;
    const double dy = ry[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  const double rho = sxy / std::sqrt(sxx * syy);
  return std::clamp(rho, -1.0, 1.0);
}

void check_spearman_inputs(const std::vector<double>& x,
                           const std::vector<double>& y) {
  if (x.size() != y.size()) {
    throw ShapeError("spearman: length mismatch (" + std::to_string(x.size()) +
                     " vs " + std::to_string(y.size()) + ")");
  }
  if (x.size() < 3) {
    throw DomainError("spearman: needs at least 3 observations, got " +
                      std::to_string(x.size()));
  }
  require_finite_vector(x, "spearman: x");
  require_finite_vector(y, "spearman: y");
  if (is_constant(x)) {
    throw DomainError("spearman: x is constant, rho is undefined");
  }
  if (is_constant(y)) {
    throw DomainError("spearman: y is constant, rho is undefined");
  }
}

}  // namespace

Histogram histogram(const std::vector<ScoreSet>& scores, std::size_t bins,
                    double lo, double hi) {
  if (bins < 1) throw DomainError("histogram: bins must be >= 1");
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
    throw DomainError("histogram: need finite lo < hi, got [" +
                      std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  Histogram out;
  const double width = (hi - lo) / static_cast<double>(bins);
  out.edges.resize(bins + 1);
  for (std::size_t k = 0; k <= bins; ++k) {
    out.edges[k] = lo + static_cast<double>(k) * width;
  }
  out.edges[bins] = hi;

  for (const SourceLabel label :
       {SourceLabel::real, SourceLabel::generated, SourceLabel::other}) {
    HistogramSeries series;
    series.label = source_label_name(label);
    series.counts.assign(bins, 0);
    bool present = false;
    for (const ScoreSet& set : scores) {
      if (set.label != label) continue;
      present = true;
      for (const double v : set.scores) {
        if (std::isnan(v)) {
          throw DomainError("histogram: NaN score under label " + series.label);
        }
        if (v < lo) {
          ++series.underflow;
        } else if (v > hi) {
          ++series.overflow;
        } else {
          std::size_t idx =
              v == hi ? bins - 1
                      : static_cast<std::size_t>((v - lo) / width);
          if (idx >= bins) idx = bins - 1;
          ++series.counts[idx];
        }
      }
    }
    if (!present) continue;
    std::size_t in_range = 0;
    for (const std::size_t c : series.counts) in_range += c;
    series.density.assign(bins, 0.0);
    if (in_range > 0) {
      for (std::size_t b = 0; b < bins; ++b) {
        series.density[b] = static_cast<double>(series.counts[b]) /
                            (static_cast<double>(in_range) * width);
      }
    }
    out.series.push_back(std::move(series));
  }
  return out;
}

SummaryStats summarize(const ScoreSet& scores) {
  const std::vector<double>& v = scores.scores;
  if (v.empty()) throw DomainError("summarize: empty score set");
  require_finite_vector(v, "summarize: scores");

  const std::size_t n = v.size();
  SummaryStats st;
  st.length = n;
  double total = 0.0;
  for (const double x : v) total += x;
  st.mean = total / static_cast<double>(n);
  if (n > 1) {
    double ss = 0.0;
    for (const double x : v) {
      const double d = x - st.mean;
      ss += d * d;
    }
    st.std_dev = std::sqrt(ss / static_cast<double>(n - 1));
  }

  std::vector<double> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  const auto quantile = [&](double p) {
    const double h = static_cast<double>(n - 1) * p;
    const std::size_t lo_i = static_cast<std::size_t>(h);
    if (lo_i + 1 >= n) return sorted[n - 1];
    const double frac = h - static_cast<double>(lo_i);
    return sorted[lo_i] + frac * (sorted[lo_i + 1] - sorted[lo_i]);
  };
  st.min = sorted.front();
  st.q1 = quantile(0.25);
  st.median = quantile(0.5);
  st.q3 = quantile(0.75);
  st.max = sorted.back();
  return st;
}

std::map<std::string, SummaryStats> stratified_summary(
    const ScoreSet& scores, const std::vector<std::string>& labels) {
  if (labels.size() != scores.scores.size()) {
    throw ShapeError("stratified_summary: " +
                     std::to_string(scores.scores.size()) + " scores vs " +
                     std::to_string(labels.size()) + " labels");
  }
  std::map<std::string, std::vector<double>> buckets;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    buckets[labels[i]].push_back(scores.scores[i]);
  }
  std::map<std::string, SummaryStats> out;
  for (const auto& [label, values] : buckets) {
    ScoreSet subset;
    subset.scores = values;
    subset.label = scores.label;
    subset.model_id = scores.model_id;
    out[label] = summarize(subset);
  }
  return out;
}

AttributionReport logistic_attribution(const ScoreSet& scores,
                                       const Matrix& covariates,
                                       double threshold) {
  const std::size_t n = covariates.n_rows;
  if (scores.scores.size() != n) {
    throw ShapeError("logistic_attribution: " +
                     std::to_string(scores.scores.size()) + " scores vs " +
                     std::to_string(n) + " covariate rows");
  }
  if (n == 0) throw ShapeError("logistic_attribution: needs at least one row");
  if (!std::isfinite(threshold)) {
    throw DomainError("logistic_attribution: threshold must be finite");
  }
  require_finite(covariates, "logistic_attribution: covariates");
  require_finite_vector(scores.scores, "logistic_attribution: scores");

  const std::size_t d = covariates.n_cols + 1;
  Matrix x(n, d);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x.at(i, 0) = 1.0;
    for (std::size_t j = 0; j + 1 < d; ++j) {
      x.at(i, j + 1) = covariates.at(i, j);
    }
    y[i] = scores.scores[i] > threshold ? 1.0 : 0.0;
  }

  const auto column_label = [&](std::size_t col) -> std::string {
    if (col == 0) return "(intercept)";
    const std::size_t j = col - 1;
    if (j < covariates.column_names.size() &&
        !covariates.column_names[j].empty()) {
      return covariates.column_names[j];
    }
    return "x" + std::to_string(j);
  };

  constexpr double kRidge = 1e-8;
  constexpr double kClamp = 30.0;
  std::vector<double> beta(d, 0.0);
  std::vector<double> mu(n, 0.0);
  std::vector<double> weight(n, 0.0);

  const auto refresh = [&]() {
    for (std::size_t i = 0; i < n; ++i) {
      double eta = 0.0;
      for (std::size_t j = 0; j < d; ++j) eta += x.at(i, j) * beta[j];
      const double m = 1.0 / (1.0 + std::exp(-eta));
      mu[i] = m;
      weight[i] = m * (1.0 - m);
    }
  };
  const auto information = [&](double diag) {
    Matrix h(d, d);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t a = 0; a < d; ++a) {
        const double wa = weight[i] * x.at(i, a);
        for (std::size_t b = 0; b < d; ++b) h.at(a, b) += wa * x.at(i, b);
      }
    }
    for (std::size_t a = 0; a < d; ++a) h.at(a, a) += diag;
    return h;
  };
  const auto gradient = [&]() {
    std::vector<double> g(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - mu[i];
      for (std::size_t j = 0; j < d; ++j) g[j] += x.at(i, j) * r;
    }
    return g;
  };

  refresh();
  // The ridge would paper over a rank-deficient design, so the deficiency
  // check runs on the bare information matrix.
  try {
    (void)solve_square(information(0.0), gradient());
  } catch (const SingularError& e) {
    throw SingularError("logistic_attribution: design is rank deficient at '" +
                            column_label(e.column) + "'",
                        e.column);
  }

  bool converged = false;
  std::size_t iterations = 0;
  for (std::size_t it = 0; it < 100 && !converged; ++it) {
    refresh();
    const std::vector<double> step = solve_square(information(kRidge), gradient());
    double largest = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      beta[j] = std::clamp(beta[j] + step[j], -kClamp, kClamp);
      largest = std::max(largest, std::fabs(step[j]));
    }
    iterations = it + 1;
    converged = largest <= 1e-8;
  }

  refresh();
  const Matrix info = information(kRidge);
  std::vector<double> se(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    std::vector<double> unit(d, 0.0);
    unit[j] = 1.0;
    const std::vector<double> column = solve_square(info, unit);
    se[j] = std::sqrt(std::max(0.0, column[j]));
  }

  // The fitted direction strictly separates the labels iff the data is
  // separable at all (the iteration walks into the separating cone whenever
  // one exists), so this check has no false positives.
  bool separated = true;
  for (std::size_t i = 0; i < n && separated; ++i) {
    double eta = 0.0;
    for (std::size_t j = 0; j < d; ++j) eta += x.at(i, j) * beta[j];
    separated = y[i] > 0.5 ? eta > 0.0 : eta < 0.0;
  }

  const auto make_row = [&](std::size_t col) {
    AttributionRow row;
    row.name = column_label(col);
    row.coef = beta[col];
    row.std_error = se[col];
    row.z = se[col] > 0.0 ? beta[col] / se[col] : 0.0;
    row.p_value = std::erfc(std::fabs(row.z) / std::sqrt(2.0));
    return row;
  };

  AttributionReport report;
  report.intercept = make_row(0);
  for (std::size_t j = 1; j < d; ++j) report.covariates.push_back(make_row(j));
  std::stable_sort(report.covariates.begin(), report.covariates.end(),
                   [](const AttributionRow& a, const AttributionRow& b) {
                     return a.p_value < b.p_value;
                   });
  report.converged = converged;
  report.iterations = iterations;
  report.separation = separated;
  return report;
}

SpearmanResult spearman(const std::vector<double>& x,
                        const std::vector<double>& y) {
  check_spearman_inputs(x, y);
  const std::size_t n = x.size();
  SpearmanResult result;
  result.n = n;
  result.rho = rank_correlation(x, y);
  if (std::fabs(result.rho) == 1.0) {
    result.p_value = 0.0;
    return result;
  }
  const double df = static_cast<double>(n - 2);
  const double t =
      result.rho * std::sqrt(df / (1.0 - result.rho * result.rho));
  const boost::math::students_t dist(df);
  result.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
  return result;
}

double spearman_permutation_p(const std::vector<double>& x,
                              const std::vector<double>& y,
                              std::size_t n_perm, RngState& rng) {
  check_spearman_inputs(x, y);
  if (x.size() > 30) {
    throw DomainError("spearman_permutation_p: meant for n <= 30, got " +
                      std::to_string(x.size()));
  }
  if (n_perm == 0) {
    throw DomainError("spearman_permutation_p: n_perm must be >= 1");
  }
  const double observed = std::fabs(rank_correlation(x, y));
  std::vector<double> shuffled = y;
  std::size_t hits = 0;
  for (std::size_t rep = 0; rep < n_perm; ++rep) {
    for (std::size_t i = shuffled.size() - 1; i > 0; --i) {
      const std::size_t j =
          static_cast<std::size_t>(rng.next_u64() % (i + 1));
      std::swap(shuffled[i], shuffled[j]);
    }
    if (std::fabs(rank_correlation(x, shuffled)) >= observed) ++hits;
  }
  return static_cast<double>(hits + 1) / static_cast<double>(n_perm + 1);
}

void validate_composition(const Matrix& table) {
  if (table.n_rows == 0 || table.n_cols == 0) {
    throw ShapeError("composition table is empty (" +
                     std::to_string(table.n_rows) + "x" +
                     std::to_string(table.n_cols) + ")");
  }
  require_finite(table, "composition table");
  for (std::size_t i = 0; i < table.n_rows; ++i) {
    double total = 0.0;
    for (std::size_t j = 0; j < table.n_cols; ++j) {
      const double v = table.at(i, j);
      if (v < 0.0) {
        throw DomainError("composition: negative entry " + std::to_string(v) +
                          " at row " + std::to_string(i) + ", column " +
                          std::to_string(j));
      }
      total += v;
    }
    if (std::fabs(total - 1.0) > 1e-6) {
      throw DomainError("composition: row " + std::to_string(i) + " sums to " +
                        std::to_string(total) + ", expected 1 within 1e-6");
    }
  }
}

Matrix clr_transform(const Matrix& table, double pseudocount) {
  validate_composition(table);
  if (!std::isfinite(pseudocount) || pseudocount < 0.0) {
    throw DomainError("clr_transform: pseudocount must be finite and >= 0");
  }
  Matrix out(table.n_rows, table.n_cols);
  out.column_names = table.column_names;
  std::vector<double> logs(table.n_cols, 0.0);
  for (std::size_t i = 0; i < table.n_rows; ++i) {
    double total = 0.0;
    for (std::size_t j = 0; j < table.n_cols; ++j) {
      total += table.at(i, j) + pseudocount;
    }
    double log_mean = 0.0;
    for (std::size_t j = 0; j < table.n_cols; ++j) {
      const double z = (table.at(i, j) + pseudocount) / total;
      if (z <= 0.0) {
        throw DomainError("clr_transform: zero entry at row " +
                          std::to_string(i) + ", column " + std::to_string(j) +
                          " needs a positive pseudocount");
      }
      logs[j] = std::log(z);
      log_mean += logs[j];
    }
    log_mean /= static_cast<double>(table.n_cols);
    for (std::size_t j = 0; j < table.n_cols; ++j) {
      out.at(i, j) = logs[j] - log_mean;
    }
  }
  return out;
}

Matrix aggregate_groups(const Matrix& table,
                        const std::map<std::string, std::string>& mapping) {
  validate_composition(table);
  if (table.column_names.size() != table.n_cols) {
    throw ShapeError("aggregate_groups: table needs a name for each column");
  }
  std::vector<std::string> group_order;
  std::map<std::string, std::size_t> group_index;
  std::vector<std::size_t> column_group(table.n_cols, 0);
  for (std::size_t j = 0; j < table.n_cols; ++j) {
    const std::string& name = table.column_names[j];
    const auto it = mapping.find(name);
    if (it == mapping.end()) {
      throw DomainError("aggregate_groups: column '" + name +
                        "' has no group mapping");
    }
    const auto found = group_index.find(it->second);
    if (found == group_index.end()) {
      group_index.emplace(it->second, group_order.size());
      column_group[j] = group_order.size();
      group_order.push_back(it->second);
    } else {
      column_group[j] = found->second;
    }
  }
  Matrix out(table.n_rows, group_order.size());
  out.column_names = group_order;
  for (std::size_t i = 0; i < table.n_rows; ++i) {
    for (std::size_t j = 0; j < table.n_cols; ++j) {
      out.at(i, column_group[j]) += table.at(i, j);
    }
  }
  return out;
}

std::vector<AssociationLevel> association_scan(
    const ScoreSet& scores, const Matrix& table,
    const std::vector<std::pair<std::string, std::map<std::string, std::string>>>&
        levels,
    double pseudocount) {
  if (scores.scores.size() != table.n_rows) {
    throw ShapeError("association_scan: " +
                     std::to_string(scores.scores.size()) + " scores vs " +
                     std::to_string(table.n_rows) + " table rows");
  }
  std::vector<AssociationLevel> out;
  out.reserve(levels.size());
  std::vector<double> column(table.n_rows, 0.0);
  for (const auto& [name, mapping] : levels) {
    const Matrix grouped = aggregate_groups(table, mapping);
    const Matrix transformed = clr_transform(grouped, pseudocount);
    AssociationLevel level;
    level.level = name;
    for (std::size_t j = 0; j < transformed.n_cols; ++j) {
      for (std::size_t i = 0; i < transformed.n_rows; ++i) {
        column[i] = transformed.at(i, j);
      }
      const SpearmanResult r = spearman(scores.scores, column);
      level.entries.push_back(
          {transformed.column_names[j], r.rho, r.p_value});
    }
    std::sort(level.entries.begin(), level.entries.end(),
              [](const AssociationEntry& a, const AssociationEntry& b) {
                const double fa = std::fabs(a.rho);
                const double fb = std::fabs(b.rho);
                if (fa != fb) return fa > fb;
                return a.group < b.group;
              });
    out.push_back(std::move(level));
  }
  return out;
}

}  // namespace rdr
