#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "divergence.hpp"
#include "errors.hpp"
#include "network.hpp"
#include "numerics.hpp"

namespace rdr {

// dr fits the plain ratio p/q with a softplus_floor head and alpha = 0;
// rdr fits the bounded relative ratio against the alpha-mixture with a
// bounded_softplus head; ksample is the rdr machinery with one numerator
// sample against the uniform mixture of all samples.
enum class Mode { dr, rdr, ksample };

std::string mode_name(Mode m);
Mode mode_from_name(const std::string& name);

struct TrainConfig {
  Mode mode = Mode::rdr;
  // Mixture weight on the numerator sample. Forced to 0 for dr and to 1/K
  // for ksample; only rdr honours the configured value.
  double alpha = 0.5;
  std::size_t epochs = 200;
  // Rows drawn from each sample per optimizer step.
  std::size_t batch_size = 128;
  std::uint64_t seed = 0;
  // Per-sample fraction held out for model selection, in [0, 0.5]. With an
  // empty holdout split the epoch training loss doubles as the selection
  // metric.
  double holdout_fraction = 0.2;
  // Architecture template; input_dim is overridden by the data width and the
  // head by the mode.
  NetworkSpec spec;
  double lr = 1e-3;
  // When set, per-column z-scoring parameters are computed on the pooled
  // training splits and stored with the model so scoring repeats them.
  bool standardize = false;
};

struct TrainedRatio {
  NetworkParams params;
  NetworkSpec spec;
  ModelMeta meta;
  // Loss report on the holdout split at the selected epoch.
  LossReport holdout;
};

// Per-epoch mean step loss and holdout loss; both have one entry per epoch.
struct TrainTrace {
  std::vector<double> train_loss;
  std::vector<double> holdout_loss;
  std::size_t best_epoch = 0;
};

struct TrainResult {
  TrainedRatio model;
  TrainTrace trace;
};

enum class SourceLabel { real, generated, other };

std::string source_label_name(SourceLabel l);
SourceLabel source_label_from_name(const std::string& name);

struct ScoreSet {
  std::vector<double> scores;
  SourceLabel label = SourceLabel::other;
  std::string model_id;
  // Optional per-row ids; empty means "use row indices".
  std::vector<std::string> ids;
};

// Minibatch training against the balancing loss. Each sample is split
// train/holdout by the seeded RNG; every step draws batch_size rows from each
// training split, scores them, clamps the scores into the mode's ratio range
// (clamped entries get zero gradient), and applies one Adam update to the
// summed parameter gradients. The returned model is the epoch snapshot with
// the lowest holdout loss (earliest epoch on ties), not the final one.
// Bit-for-bit deterministic in (data, config).
TrainResult train(const Matrix& xp, const Matrix& xq, const TrainConfig& config);

// One rdr-style model per sample: model k treats sample k as the numerator
// and the uniform 1/K mixture of all samples as the denominator. Every model
// trains from the same seed, so K = 2 reproduces train() with alpha = 0.5
// exactly.
std::vector<TrainResult> ksample_train(const std::vector<Matrix>& samples,
                                       const TrainConfig& config);

// Forward scoring only; z-scoring stored with the model is applied first.
// Scores are the raw head outputs, so rdr scores lie in (0, 2) and dr scores
// at or above the softplus floor.
ScoreSet evaluate(const TrainedRatio& model, const Matrix& x, SourceLabel label);

// Evenly spaced 1D grid: grid[k] = lo + k * (hi - lo) / (points - 1), scored
// the same way as evaluate. Only valid for input_dim = 1.
std::pair<std::vector<double>, std::vector<double>> evaluate_grid(
    const TrainedRatio& model, double lo, double hi, std::size_t points);

// Scores both test samples, clamps into the mode's ratio range and reports
// the balancing loss with the model's alpha; h2_raw = 1 - loss is the global
// divergence estimate.
LossReport estimate_h2(const TrainedRatio& model, const Matrix& xp_test,
                       const Matrix& xq_test);

}  // namespace rdr
