#include "rdr/rdr.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "analytics.hpp"
#include "divergence.hpp"
#include "errors.hpp"
#include "estimator.hpp"
#include "network.hpp"
#include "numerics.hpp"
#include "synthetic.hpp"

struct rdr_matrix {
  rdr::Matrix m;
};

struct rdr_model {
  rdr::TrainedRatio model;
};

struct rdr_scenario {
  rdr::Scenario s;
};

struct rdr_attribution {
  rdr::AttributionReport report;
};

struct rdr_association {
  rdr::AssociationLevel level;
};

namespace {

thread_local std::string g_last_error;

rdr_status fail(rdr_status status, const char* message) {
  g_last_error = message;
  return status;
}

rdr_status invalid(const char* message) {
  return fail(RDR_ERR_INVALID_ARGUMENT, message);
}

template <typename Fn>
rdr_status guarded(Fn&& fn) {
  try {
    fn();
    return RDR_OK;
  } catch (const rdr::ShapeError& e) {
    return fail(RDR_ERR_SHAPE, e.what());
  } catch (const rdr::SingularError& e) {
    return fail(RDR_ERR_SINGULAR, e.what());
  } catch (const rdr::DomainError& e) {
    return fail(RDR_ERR_DOMAIN, e.what());
  } catch (const rdr::ParseError& e) {
    return fail(RDR_ERR_PARSE, e.what());
  } catch (const rdr::NumericError& e) {
    return fail(RDR_ERR_NUMERIC, e.what());
  } catch (const rdr::IoError& e) {
    return fail(RDR_ERR_IO, e.what());
  } catch (const std::exception& e) {
    return fail(RDR_ERR_INTERNAL, e.what());
  }
}

rdr::TrainConfig to_core_config(const rdr_train_config& c) {
  rdr::TrainConfig cfg;
  switch (c.mode) {
    case RDR_MODE_DR: cfg.mode = rdr::Mode::dr; break;
    case RDR_MODE_RDR: cfg.mode = rdr::Mode::rdr; break;
    case RDR_MODE_KSAMPLE: cfg.mode = rdr::Mode::ksample; break;
    default:
      throw rdr::DomainError("train config: unknown mode " +
                             std::to_string(static_cast<int>(c.mode)));
  }
  cfg.alpha = c.alpha;
  cfg.epochs = c.epochs;
  cfg.batch_size = c.batch_size;
  cfg.seed = c.seed;
  cfg.holdout_fraction = c.holdout_fraction;
  cfg.lr = c.learning_rate;
  cfg.standardize = c.standardize != 0;
  if (c.hidden_widths != nullptr) {
    cfg.spec.hidden_widths.assign(c.hidden_widths,
                                  c.hidden_widths + c.n_hidden);
  } else if (c.n_hidden != 0) {
    throw rdr::ShapeError(
        "train config: n_hidden nonzero but hidden_widths is null");
  }
  return cfg;
}

void copy_trace(const rdr::TrainResult& result, double* train_loss_trace,
                double* holdout_loss_trace, size_t* best_epoch) {
  if (train_loss_trace != nullptr) {
    std::copy(result.trace.train_loss.begin(), result.trace.train_loss.end(),
              train_loss_trace);
  }
  if (holdout_loss_trace != nullptr) {
    std::copy(result.trace.holdout_loss.begin(),
              result.trace.holdout_loss.end(), holdout_loss_trace);
  }
  if (best_epoch != nullptr) *best_epoch = result.trace.best_epoch;
}

char* copy_string(const std::string& text) {
  char* out = static_cast<char*>(std::malloc(text.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, text.c_str(), text.size() + 1);
  return out;
}

std::string normalized_case_name(const char* name) {
  std::string s(name);
  std::replace(s.begin(), s.end(), '-', '_');
  return s;
}

}  // namespace

extern "C" {

const char* rdr_last_error(void) { return g_last_error.c_str(); }

const char* rdr_version(void) { return "1.0.0"; }

/* ---------- matrices ---------- */

rdr_status rdr_matrix_new(size_t rows, size_t cols, const double* row_major,
                          rdr_matrix** out) {
  if (out == nullptr) return invalid("rdr_matrix_new: out is null");
  *out = nullptr;
  return guarded([&] {
    auto handle = std::make_unique<rdr_matrix>();
    handle->m = rdr::Matrix(rows, cols);
    if (row_major != nullptr) {
      std::copy(row_major, row_major + rows * cols, handle->m.data.begin());
    }
    *out = handle.release();
  });
}

rdr_status rdr_matrix_set_name(rdr_matrix* m, size_t col, const char* name) {
  if (m == nullptr) return invalid("rdr_matrix_set_name: matrix is null");
  if (name == nullptr) return invalid("rdr_matrix_set_name: name is null");
  return guarded([&] {
    if (col >= m->m.n_cols) {
      throw rdr::ShapeError("rdr_matrix_set_name: column " +
                            std::to_string(col) + " out of range");
    }
    if (m->m.column_names.size() != m->m.n_cols) {
      m->m.column_names.assign(m->m.n_cols, "");
    }
    m->m.column_names[col] = name;
  });
}

rdr_status rdr_matrix_shape(const rdr_matrix* m, size_t* rows, size_t* cols) {
  if (m == nullptr) return invalid("rdr_matrix_shape: matrix is null");
  if (rows != nullptr) *rows = m->m.n_rows;
  if (cols != nullptr) *cols = m->m.n_cols;
  return RDR_OK;
}

rdr_status rdr_matrix_copy_data(const rdr_matrix* m, double* out) {
  if (m == nullptr) return invalid("rdr_matrix_copy_data: matrix is null");
  if (out == nullptr) return invalid("rdr_matrix_copy_data: out is null");
  std::copy(m->m.data.begin(), m->m.data.end(), out);
  return RDR_OK;
}

rdr_status rdr_matrix_name(const rdr_matrix* m, size_t col, const char** out) {
  if (m == nullptr) return invalid("rdr_matrix_name: matrix is null");
  if (out == nullptr) return invalid("rdr_matrix_name: out is null");
  if (col >= m->m.n_cols) {
    return fail(RDR_ERR_SHAPE, "rdr_matrix_name: column out of range");
  }
  *out = col < m->m.column_names.size() ? m->m.column_names[col].c_str() : "";
  return RDR_OK;
}

void rdr_matrix_free(rdr_matrix* m) { delete m; }

/* ---------- training ---------- */

void rdr_train_config_init(rdr_train_config* cfg) {
  if (cfg == nullptr) return;
  cfg->mode = RDR_MODE_RDR;
  cfg->alpha = 0.5;
  cfg->epochs = 200;
  cfg->batch_size = 128;
  cfg->seed = 0;
  cfg->holdout_fraction = 0.2;
  cfg->learning_rate = 1e-3;
  cfg->standardize = 0;
  cfg->hidden_widths = nullptr;
  cfg->n_hidden = 0;
}

rdr_status rdr_train(const rdr_matrix* xp, const rdr_matrix* xq,
                     const rdr_train_config* cfg, rdr_model** out,
                     double* train_loss_trace, double* holdout_loss_trace,
                     size_t* best_epoch) {
  if (xp == nullptr || xq == nullptr) return invalid("rdr_train: sample is null");
  if (cfg == nullptr) return invalid("rdr_train: config is null");
  if (out == nullptr) return invalid("rdr_train: out is null");
  *out = nullptr;
  return guarded([&] {
    rdr::TrainResult result = rdr::train(xp->m, xq->m, to_core_config(*cfg));
    copy_trace(result, train_loss_trace, holdout_loss_trace, best_epoch);
    auto handle = std::make_unique<rdr_model>();
    handle->model = std::move(result.model);
    *out = handle.release();
  });
}

rdr_status rdr_ksample_train(const rdr_matrix* const* samples, size_t k,
                             const rdr_train_config* cfg, rdr_model** out) {
  if (samples == nullptr) return invalid("rdr_ksample_train: samples is null");
  if (cfg == nullptr) return invalid("rdr_ksample_train: config is null");
  if (out == nullptr) return invalid("rdr_ksample_train: out is null");
  for (size_t i = 0; i < k; ++i) {
    if (samples[i] == nullptr) {
      return invalid("rdr_ksample_train: a sample handle is null");
    }
    out[i] = nullptr;
  }
  return guarded([&] {
    std::vector<rdr::Matrix> data;
    data.reserve(k);
    for (size_t i = 0; i < k; ++i) data.push_back(samples[i]->m);
    std::vector<rdr::TrainResult> results =
        rdr::ksample_train(data, to_core_config(*cfg));
    for (size_t i = 0; i < results.size(); ++i) {
      auto handle = std::make_unique<rdr_model>();
      handle->model = std::move(results[i].model);
      out[i] = handle.release();
    }
  });
}

rdr_status rdr_model_eval(const rdr_model* m, const rdr_matrix* x,
                          double* out_scores) {
  if (m == nullptr) return invalid("rdr_model_eval: model is null");
  if (x == nullptr) return invalid("rdr_model_eval: data is null");
  if (out_scores == nullptr) return invalid("rdr_model_eval: out is null");
  return guarded([&] {
    const rdr::ScoreSet scores =
        rdr::evaluate(m->model, x->m, rdr::SourceLabel::other);
    std::copy(scores.scores.begin(), scores.scores.end(), out_scores);
  });
}

rdr_status rdr_model_eval_grid(const rdr_model* m, double lo, double hi,
                               size_t points, double* out_x,
                               double* out_scores) {
  if (m == nullptr) return invalid("rdr_model_eval_grid: model is null");
  if (out_x == nullptr || out_scores == nullptr) {
    return invalid("rdr_model_eval_grid: out is null");
  }
  return guarded([&] {
    const auto [grid, scores] = rdr::evaluate_grid(m->model, lo, hi, points);
    std::copy(grid.begin(), grid.end(), out_x);
    std::copy(scores.begin(), scores.end(), out_scores);
  });
}

rdr_status rdr_model_h2(const rdr_model* m, const rdr_matrix* xp,
                        const rdr_matrix* xq, double* loss, double* h2_raw,
                        double* h2_clipped) {
  if (m == nullptr) return invalid("rdr_model_h2: model is null");
  if (xp == nullptr || xq == nullptr) return invalid("rdr_model_h2: sample is null");
  return guarded([&] {
    const rdr::LossReport report = rdr::estimate_h2(m->model, xp->m, xq->m);
    if (loss != nullptr) *loss = report.loss;
    if (h2_raw != nullptr) *h2_raw = report.h2_raw;
    if (h2_clipped != nullptr) *h2_clipped = report.h2_clipped;
  });
}

rdr_status rdr_model_holdout_report(const rdr_model* m, double* loss,
                                    double* h2_raw, double* h2_clipped,
                                    uint64_t* n_p, uint64_t* n_q) {
  if (m == nullptr) return invalid("rdr_model_holdout_report: model is null");
  const rdr::LossReport& report = m->model.holdout;
  if (loss != nullptr) *loss = report.loss;
  if (h2_raw != nullptr) *h2_raw = report.h2_raw;
  if (h2_clipped != nullptr) *h2_clipped = report.h2_clipped;
  if (n_p != nullptr) *n_p = report.n_p;
  if (n_q != nullptr) *n_q = report.n_q;
  return RDR_OK;
}

rdr_status rdr_model_input_dim(const rdr_model* m, size_t* out) {
  if (m == nullptr) return invalid("rdr_model_input_dim: model is null");
  if (out == nullptr) return invalid("rdr_model_input_dim: out is null");
  *out = m->model.spec.input_dim;
  return RDR_OK;
}

rdr_status rdr_model_mode(const rdr_model* m, const char** out) {
  if (m == nullptr) return invalid("rdr_model_mode: model is null");
  if (out == nullptr) return invalid("rdr_model_mode: out is null");
  *out = m->model.meta.mode.c_str();
  return RDR_OK;
}

rdr_status rdr_model_train_hashes(const rdr_model* m, const char** hash_p,
                                  const char** hash_q) {
  if (m == nullptr) return invalid("rdr_model_train_hashes: model is null");
  if (hash_p != nullptr) *hash_p = m->model.meta.train_hash_p.c_str();
  if (hash_q != nullptr) *hash_q = m->model.meta.train_hash_q.c_str();
  return RDR_OK;
}

rdr_status rdr_model_set_train_hashes(rdr_model* m, const char* hash_p,
                                      const char* hash_q) {
  if (m == nullptr) return invalid("rdr_model_set_train_hashes: model is null");
  if (hash_p == nullptr || hash_q == nullptr) {
    return invalid("rdr_model_set_train_hashes: hash is null");
  }
  m->model.meta.train_hash_p = hash_p;
  m->model.meta.train_hash_q = hash_q;
  return RDR_OK;
}

rdr_status rdr_model_to_json(const rdr_model* m, char** out) {
  if (m == nullptr) return invalid("rdr_model_to_json: model is null");
  if (out == nullptr) return invalid("rdr_model_to_json: out is null");
  *out = nullptr;
  return guarded([&] {
    *out = copy_string(
        rdr::serialize(m->model.params, m->model.spec, m->model.meta));
  });
}

rdr_status rdr_model_from_json(const char* text, rdr_model** out) {
  if (text == nullptr) return invalid("rdr_model_from_json: text is null");
  if (out == nullptr) return invalid("rdr_model_from_json: out is null");
  *out = nullptr;
  return guarded([&] {
    rdr::StoredModel stored = rdr::deserialize(text);
    auto handle = std::make_unique<rdr_model>();
    handle->model.params = std::move(stored.params);
    handle->model.spec = std::move(stored.spec);
    handle->model.meta = std::move(stored.meta);
    handle->model.holdout = rdr::LossReport{};
    *out = handle.release();
  });
}

void rdr_model_free(rdr_model* m) { delete m; }

void rdr_string_free(char* s) { std::free(s); }

/* ---------- synthetic scenarios ---------- */

rdr_status rdr_scenario_gauss_shift(double delta, rdr_scenario** out) {
  if (out == nullptr) return invalid("rdr_scenario_gauss_shift: out is null");
  *out = nullptr;
  return guarded([&] {
    if (!std::isfinite(delta)) {
      throw rdr::DomainError("gauss_shift: delta must be finite");
    }
    auto handle = std::make_unique<rdr_scenario>();
    handle->s = rdr::Scenario::gauss_shift(delta);
    *out = handle.release();
  });
}

rdr_status rdr_scenario_beta_mixture(const char* case_name,
                                     rdr_scenario** out) {
  if (case_name == nullptr) {
    return invalid("rdr_scenario_beta_mixture: case_name is null");
  }
  if (out == nullptr) return invalid("rdr_scenario_beta_mixture: out is null");
  *out = nullptr;
  return guarded([&] {
    auto handle = std::make_unique<rdr_scenario>();
    handle->s = rdr::Scenario::beta_mixture(
        rdr::beta_case_from_name(normalized_case_name(case_name)));
    *out = handle.release();
  });
}

rdr_status rdr_scenario_sample(const rdr_scenario* s, size_t n_p, size_t n_q,
                               uint64_t seed, rdr_matrix** xp,
                               rdr_matrix** xq) {
  if (s == nullptr) return invalid("rdr_scenario_sample: scenario is null");
  if (xp == nullptr || xq == nullptr) {
    return invalid("rdr_scenario_sample: out is null");
  }
  *xp = nullptr;
  *xq = nullptr;
  return guarded([&] {
    rdr::RngState rng(seed);
    auto [p, q] = rdr::sample(s->s, n_p, n_q, rng);
    auto hp = std::make_unique<rdr_matrix>();
    auto hq = std::make_unique<rdr_matrix>();
    hp->m = std::move(p);
    hq->m = std::move(q);
    *xp = hp.release();
    *xq = hq.release();
  });
}

rdr_status rdr_scenario_range(const rdr_scenario* s, double* lo, double* hi) {
  if (s == nullptr) return invalid("rdr_scenario_range: scenario is null");
  const rdr::QuadratureGrid grid = rdr::scenario_grid(s->s);
  if (lo != nullptr) *lo = grid.lo;
  if (hi != nullptr) *hi = grid.hi;
  return RDR_OK;
}

rdr_status rdr_scenario_oracle(const rdr_scenario* s, size_t points, double* x,
                               double* p, double* q, double* g, double* r) {
  if (s == nullptr) return invalid("rdr_scenario_oracle: scenario is null");
  if (x == nullptr || p == nullptr || q == nullptr || g == nullptr ||
      r == nullptr) {
    return invalid("rdr_scenario_oracle: out is null");
  }
  return guarded([&] {
    if (points < 2) {
      throw rdr::DomainError("rdr_scenario_oracle: needs at least 2 points");
    }
    const rdr::QuadratureGrid grid = rdr::scenario_grid(s->s);
    const double step =
        (grid.hi - grid.lo) / static_cast<double>(points - 1);
    for (size_t k = 0; k < points; ++k) {
      const double xi = grid.lo + static_cast<double>(k) * step;
      x[k] = xi;
      p[k] = rdr::density_p(s->s, xi);
      q[k] = rdr::density_q(s->s, xi);
      g[k] = q[k] > 0.0 ? rdr::analytic_dr(s->s, xi)
                        : std::numeric_limits<double>::infinity();
      r[k] = rdr::analytic_rdr(s->s, xi);
    }
  });
}

rdr_status rdr_scenario_quadrature_h2(const rdr_scenario* s,
                                      int mixture_denominator, double* out) {
  if (s == nullptr) return invalid("rdr_scenario_quadrature_h2: scenario is null");
  if (out == nullptr) return invalid("rdr_scenario_quadrature_h2: out is null");
  return guarded([&] {
    *out = rdr::quadrature_h2(s->s, mixture_denominator != 0
                                        ? rdr::Denominator::mixture
                                        : rdr::Denominator::q);
  });
}

rdr_status rdr_scenario_pushforward_h2(const rdr_scenario* s,
                                       const rdr_model* m, size_t n_mc,
                                       size_t bins, uint64_t seed,
                                       double* out) {
  if (s == nullptr) return invalid("rdr_scenario_pushforward_h2: scenario is null");
  if (m == nullptr) return invalid("rdr_scenario_pushforward_h2: model is null");
  if (out == nullptr) return invalid("rdr_scenario_pushforward_h2: out is null");
  return guarded([&] {
    rdr::RngState rng(seed);
    *out = rdr::pushforward_h2(s->s, m->model, n_mc, bins, rng);
  });
}

void rdr_scenario_free(rdr_scenario* s) { delete s; }

/* ---------- analytics ---------- */

rdr_status rdr_summarize(const double* scores, size_t n,
                         rdr_summary_stats* out) {
  if (scores == nullptr && n > 0) return invalid("rdr_summarize: scores is null");
  if (out == nullptr) return invalid("rdr_summarize: out is null");
  return guarded([&] {
    rdr::ScoreSet set;
    set.scores.assign(scores, scores + n);
    const rdr::SummaryStats st = rdr::summarize(set);
    out->length = st.length;
    out->mean = st.mean;
    out->std_dev = st.std_dev;
    out->min = st.min;
    out->q1 = st.q1;
    out->median = st.median;
    out->q3 = st.q3;
    out->max = st.max;
  });
}

rdr_status rdr_histogram(const double* scores, size_t n, size_t bins,
                         double lo, double hi, double* edges, uint64_t* counts,
                         uint64_t* underflow, uint64_t* overflow,
                         double* density) {
  if (scores == nullptr && n > 0) return invalid("rdr_histogram: scores is null");
  if (edges == nullptr || counts == nullptr) {
    return invalid("rdr_histogram: edges/counts is null");
  }
  return guarded([&] {
    rdr::ScoreSet set;
    set.scores.assign(scores, scores + n);
    set.label = rdr::SourceLabel::other;
    const rdr::Histogram h = rdr::histogram({set}, bins, lo, hi);
    std::copy(h.edges.begin(), h.edges.end(), edges);
    const rdr::HistogramSeries& series = h.series.front();
    for (size_t b = 0; b < bins; ++b) {
      counts[b] = series.counts[b];
      if (density != nullptr) density[b] = series.density[b];
    }
    if (underflow != nullptr) *underflow = series.underflow;
    if (overflow != nullptr) *overflow = series.overflow;
  });
}

rdr_status rdr_logistic_attribution(const double* scores, size_t n,
                                    const rdr_matrix* covariates,
                                    double threshold, rdr_attribution** out) {
  if (scores == nullptr && n > 0) {
    return invalid("rdr_logistic_attribution: scores is null");
  }
  if (covariates == nullptr) {
    return invalid("rdr_logistic_attribution: covariates is null");
  }
  if (out == nullptr) return invalid("rdr_logistic_attribution: out is null");
  *out = nullptr;
  return guarded([&] {
    rdr::ScoreSet set;
    set.scores.assign(scores, scores + n);
    auto handle = std::make_unique<rdr_attribution>();
    handle->report =
        rdr::logistic_attribution(set, covariates->m, threshold);
    *out = handle.release();
  });
}

rdr_status rdr_attribution_count(const rdr_attribution* a, size_t* out) {
  if (a == nullptr) return invalid("rdr_attribution_count: handle is null");
  if (out == nullptr) return invalid("rdr_attribution_count: out is null");
  *out = a->report.covariates.size();
  return RDR_OK;
}

rdr_status rdr_attribution_row(const rdr_attribution* a, size_t index,
                               const char** name, double* coef,
                               double* std_error, double* z, double* p_value) {
  if (a == nullptr) return invalid("rdr_attribution_row: handle is null");
  if (index >= a->report.covariates.size()) {
    return fail(RDR_ERR_SHAPE, "rdr_attribution_row: index out of range");
  }
  const rdr::AttributionRow& row = a->report.covariates[index];
  if (name != nullptr) *name = row.name.c_str();
  if (coef != nullptr) *coef = row.coef;
  if (std_error != nullptr) *std_error = row.std_error;
  if (z != nullptr) *z = row.z;
  if (p_value != nullptr) *p_value = row.p_value;
  return RDR_OK;
}

rdr_status rdr_attribution_intercept(const rdr_attribution* a, double* coef,
                                     double* std_error, double* z,
                                     double* p_value) {
  if (a == nullptr) return invalid("rdr_attribution_intercept: handle is null");
  const rdr::AttributionRow& row = a->report.intercept;
  if (coef != nullptr) *coef = row.coef;
  if (std_error != nullptr) *std_error = row.std_error;
  if (z != nullptr) *z = row.z;
  if (p_value != nullptr) *p_value = row.p_value;
  return RDR_OK;
}

rdr_status rdr_attribution_flags(const rdr_attribution* a, int* converged,
                                 int* separation, uint64_t* iterations) {
  if (a == nullptr) return invalid("rdr_attribution_flags: handle is null");
  if (converged != nullptr) *converged = a->report.converged ? 1 : 0;
  if (separation != nullptr) *separation = a->report.separation ? 1 : 0;
  if (iterations != nullptr) *iterations = a->report.iterations;
  return RDR_OK;
}

void rdr_attribution_free(rdr_attribution* a) { delete a; }

rdr_status rdr_spearman(const double* x, const double* y, size_t n,
                        double* rho, double* p_value) {
  if ((x == nullptr || y == nullptr) && n > 0) {
    return invalid("rdr_spearman: input is null");
  }
  return guarded([&] {
    const std::vector<double> vx(x, x + n);
    const std::vector<double> vy(y, y + n);
    const rdr::SpearmanResult r = rdr::spearman(vx, vy);
    if (rho != nullptr) *rho = r.rho;
    if (p_value != nullptr) *p_value = r.p_value;
  });
}

rdr_status rdr_validate_composition(const rdr_matrix* table) {
  if (table == nullptr) return invalid("rdr_validate_composition: table is null");
  return guarded([&] { rdr::validate_composition(table->m); });
}

rdr_status rdr_clr_transform(const rdr_matrix* table, double pseudocount,
                             rdr_matrix** out) {
  if (table == nullptr) return invalid("rdr_clr_transform: table is null");
  if (out == nullptr) return invalid("rdr_clr_transform: out is null");
  *out = nullptr;
  return guarded([&] {
    auto handle = std::make_unique<rdr_matrix>();
    handle->m = rdr::clr_transform(table->m, pseudocount);
    *out = handle.release();
  });
}

namespace {

std::map<std::string, std::string> mapping_from_arrays(
    const char* const* columns, const char* const* groups, size_t n_pairs) {
  std::map<std::string, std::string> mapping;
  for (size_t i = 0; i < n_pairs; ++i) {
    if (columns[i] == nullptr || groups[i] == nullptr) {
      throw rdr::DomainError("group mapping: null name at pair " +
                             std::to_string(i));
    }
    mapping[columns[i]] = groups[i];
  }
  return mapping;
}

}  // namespace

rdr_status rdr_aggregate_groups(const rdr_matrix* table,
                                const char* const* columns,
                                const char* const* groups, size_t n_pairs,
                                rdr_matrix** out) {
  if (table == nullptr) return invalid("rdr_aggregate_groups: table is null");
  if ((columns == nullptr || groups == nullptr) && n_pairs > 0) {
    return invalid("rdr_aggregate_groups: mapping is null");
  }
  if (out == nullptr) return invalid("rdr_aggregate_groups: out is null");
  *out = nullptr;
  return guarded([&] {
    auto handle = std::make_unique<rdr_matrix>();
    handle->m = rdr::aggregate_groups(
        table->m, mapping_from_arrays(columns, groups, n_pairs));
    *out = handle.release();
  });
}

rdr_status rdr_association_scan(const double* scores, size_t n,
                                const rdr_matrix* table,
                                const char* const* columns,
                                const char* const* groups, size_t n_pairs,
                                double pseudocount, rdr_association** out) {
  if (scores == nullptr && n > 0) {
    return invalid("rdr_association_scan: scores is null");
  }
  if (table == nullptr) return invalid("rdr_association_scan: table is null");
  if ((columns == nullptr || groups == nullptr) && n_pairs > 0) {
    return invalid("rdr_association_scan: mapping is null");
  }
  if (out == nullptr) return invalid("rdr_association_scan: out is null");
  *out = nullptr;
  return guarded([&] {
    rdr::ScoreSet set;
    set.scores.assign(scores, scores + n);
    const auto levels = std::vector<
        std::pair<std::string, std::map<std::string, std::string>>>{
        {"level", mapping_from_arrays(columns, groups, n_pairs)}};
    auto scanned =
        rdr::association_scan(set, table->m, levels, pseudocount);
    auto handle = std::make_unique<rdr_association>();
    handle->level = std::move(scanned.front());
    *out = handle.release();
  });
}

rdr_status rdr_association_count(const rdr_association* a, size_t* out) {
  if (a == nullptr) return invalid("rdr_association_count: handle is null");
  if (out == nullptr) return invalid("rdr_association_count: out is null");
  *out = a->level.entries.size();
  return RDR_OK;
}

rdr_status rdr_association_entry(const rdr_association* a, size_t index,
                                 const char** group, double* rho,
                                 double* p_value) {
  if (a == nullptr) return invalid("rdr_association_entry: handle is null");
  if (index >= a->level.entries.size()) {
    return fail(RDR_ERR_SHAPE, "rdr_association_entry: index out of range");
  }
  const rdr::AssociationEntry& entry = a->level.entries[index];
  if (group != nullptr) *group = entry.group.c_str();
  if (rho != nullptr) *rho = entry.rho;
  if (p_value != nullptr) *p_value = entry.p_value;
  return RDR_OK;
}

void rdr_association_free(rdr_association* a) { delete a; }

}  // extern "C"
