#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "estimator.hpp"
#include "numerics.hpp"

namespace rdr {

// One bucketed series per source label; score sets sharing a label are
// merged. Out-of-range scores land in underflow/overflow, never dropped, so
// counts + underflow + overflow always equals the label's input size.
// density = count / (in-range total * bin width), integrating to 1 over the
// covered range.
struct HistogramSeries {
  std::string label;
  std::vector<std::size_t> counts;
  std::size_t underflow = 0;
  std::size_t overflow = 0;
  std::vector<double> density;
};

struct Histogram {
  std::vector<double> edges;  // bins + 1, strictly increasing
  std::vector<HistogramSeries> series;  // ordered real, generated, other
};

// Bins are half-open [e_k, e_{k+1}) except the last, which is closed.
Histogram histogram(const std::vector<ScoreSet>& scores, std::size_t bins = 40,
                    double lo = 0.0, double hi = 2.0);

// Sample std uses the n-1 denominator (0 for a singleton); quantiles are
// type-7: h = (n-1)p, linear interpolation between order statistics.
struct SummaryStats {
  std::size_t length = 0;
  double mean = 0.0;
  double std_dev = 0.0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

SummaryStats summarize(const ScoreSet& scores);

// Per-label summaries; the map order (lexicographic) is the output order.
std::map<std::string, SummaryStats> stratified_summary(
    const ScoreSet& scores, const std::vector<std::string>& labels);

struct AttributionRow {
  std::string name;
  double coef = 0.0;
  double std_error = 0.0;
  double z = 0.0;
  double p_value = 1.0;
};

// Joint logistic regression of 1{score > threshold} on all covariates.
// covariates lists rows ascending by p-value (ties keep column order); the
// intercept is reported separately.
struct AttributionReport {
  std::vector<AttributionRow> covariates;
  AttributionRow intercept;
  bool converged = false;
  bool separation = false;
  std::size_t iterations = 0;
};

// IRLS (Newton with a 1e-8 ridge on the Hessian diagonal; the fixed point is
// the plain MLE). Wald z = coef/se with se from the inverse ridged
// information at the final iterate; two-sided p via the normal CDF.
// Coefficients are clamped to |coef| <= 30; the separation flag is raised
// when the fitted direction strictly separates the labels (the MLE is then
// infinite and the reported coefficients sit at the clamp or a saturation
// plateau). A rank-deficient design (detected before the ridge is applied)
// throws SingularError naming the collinear column.
AttributionReport logistic_attribution(const ScoreSet& scores,
                                       const Matrix& covariates,
                                       double threshold = 1.0);

struct SpearmanResult {
  double rho = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

// Average ranks for ties; rho is the Pearson correlation of the ranks; p from
// t = rho sqrt((n-2)/(1-rho^2)) with n-2 degrees of freedom, and p = 0 at
// rho = +-1. Constant input is a domain error (rho undefined).
SpearmanResult spearman(const std::vector<double>& x,
                        const std::vector<double>& y);

// Monte-Carlo permutation p-value for small samples (n <= 30): the share of
// score permutations with |rho| at least the observed one, add-one smoothed.
double spearman_permutation_p(const std::vector<double>& x,
                              const std::vector<double>& y,
                              std::size_t n_perm, RngState& rng);

// A composition is a matrix whose rows are nonnegative and sum to 1 within
// 1e-6; columns are taxa. Throws DomainError naming the offending entry/row.
void validate_composition(const Matrix& table);

// Per row: add the pseudocount, renormalize to sum 1, take logs and center:
// clr_j = log z_j - mean_k log z_k. Output rows sum to 0 within 1e-9.
Matrix clr_transform(const Matrix& table, double pseudocount = 1e-6);

// Sums member columns into group columns, ordered by first appearance in
// column order (so the identity mapping reproduces the table bitwise). Every
// column must be mapped.
Matrix aggregate_groups(const Matrix& table,
                        const std::map<std::string, std::string>& mapping);

struct AssociationEntry {
  std::string group;
  double rho = 0.0;
  double p_value = 1.0;
};

struct AssociationLevel {
  std::string level;
  std::vector<AssociationEntry> entries;  // sorted by |rho| descending
};

// For each level: aggregate the composition, CLR-transform (in that order),
// then Spearman-correlate the scores against every group column. Entries are
// sorted by |rho| descending (ties by group name).
std::vector<AssociationLevel> association_scan(
    const ScoreSet& scores, const Matrix& table,
    const std::vector<std::pair<std::string, std::map<std::string, std::string>>>&
        levels,
    double pseudocount = 1e-6);

}  // namespace rdr
