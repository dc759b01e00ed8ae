#include "estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

namespace rdr {

std::string mode_name(Mode m) {
  switch (m) {
    case Mode::dr: return "dr";
    case Mode::rdr: return "rdr";
    case Mode::ksample: return "ksample";
  }
  throw DomainError("unknown mode value");
}

Mode mode_from_name(const std::string& name) {
  if (name == "dr") return Mode::dr;
  if (name == "rdr") return Mode::rdr;
  if (name == "ksample") return Mode::ksample;
  throw ParseError("unknown mode: " + name);
}

std::string source_label_name(SourceLabel l) {
  switch (l) {
    case SourceLabel::real: return "real";
    case SourceLabel::generated: return "generated";
    case SourceLabel::other: return "other";
  }
  throw DomainError("unknown source label value");
}

SourceLabel source_label_from_name(const std::string& name) {
  if (name == "real") return SourceLabel::real;
  if (name == "generated") return SourceLabel::generated;
  if (name == "other") return SourceLabel::other;
  throw ParseError("unknown source label: " + name);
}

namespace {

void shuffle_indices(std::vector<std::size_t>& idx, RngState& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.next_u64() % i);
    std::swap(idx[i - 1], idx[j]);
  }
}

Matrix gather_rows(const Matrix& src, const std::vector<std::size_t>& idx,
                   std::size_t offset, std::size_t count) {
  Matrix out(count, src.n_cols);
  for (std::size_t i = 0; i < count; ++i) {
    const auto r = src.row(idx[offset + i]);
    std::copy(r.begin(), r.end(), out.row(i).begin());
  }
  return out;
}

Matrix standardized(const Matrix& m, const std::vector<double>& means,
                    const std::vector<double>& stds) {
  if (means.size() != m.n_cols || stds.size() != m.n_cols)
    throw ShapeError("z-scoring parameters cover " +
                     std::to_string(means.size()) + " columns, data has " +
                     std::to_string(m.n_cols));
  Matrix out = m;
  for (std::size_t i = 0; i < m.n_rows; ++i)
    for (std::size_t j = 0; j < m.n_cols; ++j)
      out.at(i, j) = (m.at(i, j) - means[j]) / stds[j];
  return out;
}

// Score -> loss argument. Clamped entries are reported so their gradient can
// be dropped; the clamp keeps g^{-3/2} finite when a bounded head underflows.
double clamp_score(double s, Mode mode, const ModelMeta& meta, bool& clamped) {
  clamped = true;
  if (mode == Mode::dr) {
    if (s < meta.g_min) return meta.g_min;
    if (s > meta.g_max) return meta.g_max;
  } else if (s < meta.r_floor) {
    return meta.r_floor;
  }
  clamped = false;
  return s;
}

LossReport report_from_loss(double loss, double alpha, std::size_t n_num,
                            std::size_t n_rest) {
  LossReport rep;
  rep.loss = loss;
  rep.h2_raw = 1.0 - loss;
  rep.h2_clipped = std::clamp(rep.h2_raw, 0.0, hellinger_cap(alpha));
  rep.n_p = n_num;
  rep.n_q = n_rest;
  return rep;
}

void add_params(NetworkParams& acc, const NetworkParams& inc) {
  for (std::size_t l = 0; l < acc.layers.size(); ++l) {
    Layer& a = acc.layers[l];
    const Layer& b = inc.layers[l];
    for (std::size_t k = 0; k < a.w.data.size(); ++k) a.w.data[k] += b.w.data[k];
    for (std::size_t k = 0; k < a.b.size(); ++k) a.b[k] += b.b[k];
  }
}

struct CoreInputs {
  std::vector<const Matrix*> samples;
  std::size_t numerator = 0;
  std::vector<double> weights;
  Mode mode = Mode::rdr;
  double alpha = 0.5;
};

TrainResult train_core(const CoreInputs& in, const TrainConfig& config) {
  const std::size_t k_count = in.samples.size();
  const std::size_t dims = in.samples[0]->n_cols;
  if (dims == 0) throw ShapeError("samples need at least one column");
  std::size_t min_rows = std::numeric_limits<std::size_t>::max();
  for (std::size_t s = 0; s < k_count; ++s) {
    const Matrix& m = *in.samples[s];
    if (m.n_cols != dims)
      throw ShapeError("sample " + std::to_string(s) + " has " +
                       std::to_string(m.n_cols) + " columns, expected " +
                       std::to_string(dims));
    if (m.n_rows < 10)
      throw ShapeError("sample " + std::to_string(s) + " has " +
                       std::to_string(m.n_rows) + " rows, need at least 10");
    require_finite(m, "sample " + std::to_string(s));
    min_rows = std::min(min_rows, m.n_rows);
  }
  if (config.epochs < 1) throw DomainError("epochs must be at least 1");
  if (config.batch_size < 1) throw DomainError("batch_size must be at least 1");
  if (config.batch_size > min_rows)
    throw ShapeError("batch_size " + std::to_string(config.batch_size) +
                     " exceeds the smallest sample size " +
                     std::to_string(min_rows));
  if (!(config.holdout_fraction >= 0.0 && config.holdout_fraction <= 0.5))
    throw DomainError("holdout_fraction must lie in [0, 0.5]");
  require_mixture_weight(in.alpha);

  NetworkSpec spec = config.spec;
  spec.input_dim = dims;
  spec.head = in.mode == Mode::dr ? Head::softplus_floor : Head::bounded_softplus;
  validate_spec(spec);

  const RngState root(config.seed);
  RngState init_rng = root.derive(0);
  RngState split_rng = root.derive(1);
  RngState epoch_rng = root.derive(2);

  // Per-sample split: shuffle once, train rows first, holdout rows after.
  std::vector<std::vector<std::size_t>> train_idx(k_count), hold_idx(k_count);
  for (std::size_t s = 0; s < k_count; ++s) {
    const std::size_t n = in.samples[s]->n_rows;
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    shuffle_indices(perm, split_rng);
    const std::size_t n_hold = static_cast<std::size_t>(
        static_cast<double>(n) * config.holdout_fraction);
    const std::size_t n_train = n - n_hold;
    train_idx[s].assign(perm.begin(), perm.begin() + n_train);
    hold_idx[s].assign(perm.begin() + n_train, perm.end());
  }

  ModelMeta meta;
  meta.mode = mode_name(in.mode);
  meta.alpha = in.alpha;
  meta.seed = config.seed;

  // With z-scoring on, both splits are transformed with parameters fitted on
  // the pooled training rows, and the parameters travel with the model.
  std::vector<Matrix> local(k_count);
  std::vector<const Matrix*> data = in.samples;
  if (config.standardize) {
    std::vector<double> means(dims, 0.0), vars(dims, 0.0), stds(dims, 0.0);
    std::size_t count = 0;
    for (std::size_t s = 0; s < k_count; ++s)
      for (const std::size_t i : train_idx[s]) {
        const auto r = in.samples[s]->row(i);
        for (std::size_t j = 0; j < dims; ++j) means[j] += r[j];
        ++count;
      }
    for (std::size_t j = 0; j < dims; ++j) means[j] /= static_cast<double>(count);
    for (std::size_t s = 0; s < k_count; ++s)
      for (const std::size_t i : train_idx[s]) {
        const auto r = in.samples[s]->row(i);
        for (std::size_t j = 0; j < dims; ++j) {
          const double d = r[j] - means[j];
          vars[j] += d * d;
        }
      }
    for (std::size_t j = 0; j < dims; ++j) {
      stds[j] = std::sqrt(vars[j] / static_cast<double>(count));
      if (stds[j] < 1e-12) stds[j] = 1.0;
    }
    meta.standardize_means = means;
    meta.standardize_stds = stds;
    for (std::size_t s = 0; s < k_count; ++s) {
      local[s] = standardized(*in.samples[s], means, stds);
      data[s] = &local[s];
    }
  }

  NetworkParams params = init_params(spec, init_rng);
  AdamState adam = adam_init(params, config.lr);

  std::vector<Matrix> hold(k_count);
  bool have_holdout = true;
  std::size_t min_train = std::numeric_limits<std::size_t>::max();
  std::size_t hold_rest = 0, train_rest = 0;
  for (std::size_t s = 0; s < k_count; ++s) {
    hold[s] = gather_rows(*data[s], hold_idx[s], 0, hold_idx[s].size());
    have_holdout = have_holdout && !hold_idx[s].empty();
    min_train = std::min(min_train, train_idx[s].size());
    if (s != in.numerator) {
      hold_rest += hold_idx[s].size();
      train_rest += train_idx[s].size();
    }
  }
  const std::size_t batch = std::min(config.batch_size, min_train);
  const std::size_t steps = std::max<std::size_t>(1, min_train / batch);

  const auto mixture_loss = [&](const std::vector<Matrix>& mats) {
    std::vector<std::vector<double>> g(k_count);
    for (std::size_t s = 0; s < k_count; ++s) {
      const std::vector<double> scores = forward(params, spec, mats[s]);
      g[s].resize(scores.size());
      bool clamped = false;
      for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!std::isfinite(scores[i]))
          return std::numeric_limits<double>::quiet_NaN();
        g[s][i] = clamp_score(scores[i], in.mode, meta, clamped);
      }
    }
    return balancing_loss_k(g, in.numerator, in.weights);
  };

  TrainTrace trace;
  trace.train_loss.reserve(config.epochs);
  trace.holdout_loss.reserve(config.epochs);

  NetworkParams best_params = params;
  double best_metric = std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0;
  long long last_finite = -1;
  const auto numeric_abort = [&](const std::string& which, std::size_t epoch) {
    const std::string tail = last_finite < 0
        ? std::string("no epoch finished with finite losses")
        : "last finite epoch was " + std::to_string(last_finite);
    throw NumericError("non-finite " + which + " at epoch " +
                       std::to_string(epoch) + "; " + tail);
  };

  std::vector<Matrix> batches(k_count);
  std::vector<ForwardCache> caches(k_count);
  std::vector<std::vector<double>> g(k_count);
  std::vector<std::vector<char>> masked(k_count);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t s = 0; s < k_count; ++s)
      shuffle_indices(train_idx[s], epoch_rng);

    double loss_sum = 0.0;
    for (std::size_t t = 0; t < steps; ++t) {
      for (std::size_t s = 0; s < k_count; ++s) {
        batches[s] = gather_rows(*data[s], train_idx[s], t * batch, batch);
        const std::vector<double> scores =
            forward(params, spec, batches[s], &caches[s]);
        g[s].resize(batch);
        masked[s].assign(batch, 0);
        for (std::size_t i = 0; i < batch; ++i) {
          if (!std::isfinite(scores[i])) numeric_abort("network score", epoch);
          bool clamped = false;
          g[s][i] = clamp_score(scores[i], in.mode, meta, clamped);
          masked[s][i] = clamped ? 1 : 0;
        }
      }
      const double loss = balancing_loss_k(g, in.numerator, in.weights);
      if (!std::isfinite(loss)) numeric_abort("training loss", epoch);
      auto dg = balancing_loss_k_grad(g, in.numerator, in.weights);
      NetworkParams grads;
      for (std::size_t s = 0; s < k_count; ++s) {
        for (std::size_t i = 0; i < batch; ++i)
          if (masked[s][i]) dg[s][i] = 0.0;
        NetworkParams part = backward(params, spec, caches[s], dg[s]);
        if (s == 0) grads = std::move(part);
        else add_params(grads, part);
      }
      adam_step(params, grads, adam);
      loss_sum += loss;
    }
    const double train_loss = loss_sum / static_cast<double>(steps);
    const double selection = have_holdout ? mixture_loss(hold) : train_loss;
    if (!std::isfinite(train_loss)) numeric_abort("training loss", epoch);
    if (!std::isfinite(selection)) numeric_abort("holdout loss", epoch);
    trace.train_loss.push_back(train_loss);
    trace.holdout_loss.push_back(selection);
    if (selection < best_metric) {
      best_metric = selection;
      best_params = params;
      best_epoch = epoch;
    }
    last_finite = static_cast<long long>(epoch);
  }

  TrainResult out;
  out.model.params = std::move(best_params);
  out.model.spec = spec;
  out.model.meta = meta;
  out.model.holdout = report_from_loss(
      best_metric, in.alpha,
      have_holdout ? hold_idx[in.numerator].size() : train_idx[in.numerator].size(),
      have_holdout ? hold_rest : train_rest);
  out.trace = std::move(trace);
  out.trace.best_epoch = best_epoch;
  return out;
}

}  // namespace

TrainResult train(const Matrix& xp, const Matrix& xq, const TrainConfig& config) {
  if (config.mode == Mode::ksample)
    throw DomainError("ksample mode trains through ksample_train");
  CoreInputs in;
  in.samples = {&xp, &xq};
  in.numerator = 0;
  in.mode = config.mode;
  in.alpha = config.mode == Mode::dr ? 0.0 : config.alpha;
  require_mixture_weight(in.alpha);
  in.weights = {in.alpha, 1.0 - in.alpha};
  return train_core(in, config);
}

std::vector<TrainResult> ksample_train(const std::vector<Matrix>& samples,
                                       const TrainConfig& config) {
  if (samples.size() < 2)
    throw ShapeError("ksample_train needs at least 2 samples, got " +
                     std::to_string(samples.size()));
  const std::size_t k = samples.size();
  const std::vector<double> weights(k, 1.0 / static_cast<double>(k));
  std::vector<TrainResult> out;
  out.reserve(k);
  for (std::size_t numerator = 0; numerator < k; ++numerator) {
    CoreInputs in;
    in.samples.reserve(k);
    for (const Matrix& m : samples) in.samples.push_back(&m);
    in.numerator = numerator;
    in.weights = weights;
    in.mode = Mode::ksample;
    in.alpha = weights[numerator];
    out.push_back(train_core(in, config));
  }
  return out;
}

ScoreSet evaluate(const TrainedRatio& model, const Matrix& x, SourceLabel label) {
  if (x.n_cols != model.spec.input_dim)
    throw ShapeError("matrix has " + std::to_string(x.n_cols) +
                     " columns, model expects " +
                     std::to_string(model.spec.input_dim));
  ScoreSet out;
  out.label = label;
  out.model_id = model.meta.mode + "-" + std::to_string(model.meta.seed);
  if (x.n_rows == 0) return out;
  require_finite(x, "evaluation input");
  if (model.meta.standardize_means.empty()) {
    out.scores = forward(model.params, model.spec, x);
  } else {
    out.scores = forward(model.params, model.spec,
                         standardized(x, model.meta.standardize_means,
                                      model.meta.standardize_stds));
  }
  return out;
}

std::pair<std::vector<double>, std::vector<double>> evaluate_grid(
    const TrainedRatio& model, double lo, double hi, std::size_t points) {
  if (model.spec.input_dim != 1)
    throw ShapeError("grid evaluation needs input_dim 1, model has " +
                     std::to_string(model.spec.input_dim));
  if (points < 2) throw DomainError("grid needs at least 2 points");
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi))
    throw DomainError("grid needs finite lo < hi");
  std::vector<double> grid(points);
  Matrix x(points, 1);
  const double step = (hi - lo) / static_cast<double>(points - 1);
  for (std::size_t k = 0; k < points; ++k) {
    grid[k] = lo + static_cast<double>(k) * step;
    x.at(k, 0) = grid[k];
  }
  std::vector<double> scores = evaluate(model, x, SourceLabel::other).scores;
  return {std::move(grid), std::move(scores)};
}

LossReport estimate_h2(const TrainedRatio& model, const Matrix& xp_test,
                       const Matrix& xq_test) {
  if (xp_test.n_rows == 0 || xq_test.n_rows == 0)
    throw ShapeError("estimate_h2 needs non-empty test samples");
  ScoreSet sp = evaluate(model, xp_test, SourceLabel::real);
  ScoreSet sq = evaluate(model, xq_test, SourceLabel::other);
  const Mode mode = mode_from_name(model.meta.mode);
  bool clamped = false;
  for (double& v : sp.scores) v = clamp_score(v, mode, model.meta, clamped);
  for (double& v : sq.scores) v = clamp_score(v, mode, model.meta, clamped);
  return balancing_loss(sp.scores, sq.scores, model.meta.alpha);
}

}  // namespace rdr
