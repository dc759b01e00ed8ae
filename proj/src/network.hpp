#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "numerics.hpp"

namespace rdr {

enum class Head { bounded_softplus, softplus_floor, linear };

std::string head_name(Head h);
Head head_from_name(const std::string& name);

// Architecture description. At least one hidden layer; every width >= 1.
struct NetworkSpec {
  std::size_t input_dim = 1;
  std::vector<std::size_t> hidden_widths = {64, 64, 64, 64};
  Head head = Head::bounded_softplus;
};

void validate_spec(const NetworkSpec& spec);

struct Layer {
  Matrix w;               // out x in
  std::vector<double> b;  // out
};

// Hidden layers followed by the single-output final layer.
struct NetworkParams {
  std::vector<Layer> layers;
};

// Checks the layer chain against the spec (widths line up, final output is 1).
void validate_params(const NetworkParams& params, const NetworkSpec& spec);

// He-scaled init: weights ~ N(0, 2/fan_in), biases zero. Draw order is layer
// by layer, row-major, so a fixed seed reproduces parameters bitwise.
NetworkParams init_params(const NetworkSpec& spec, RngState& rng);

// Per-layer records kept by forward for the matching backward call.
struct ForwardCache {
  std::vector<Matrix> acts;  // acts[0] is the input batch
  std::vector<Matrix> pres;  // pre-activations, one per layer
};

// Scores one batch. Hidden activations are ReLU; the head maps the final
// pre-activation z to: bounded_softplus 2s/(s+1) with s = stable_softplus(z),
// softplus_floor max(s, 1e-6), or z itself for linear.
std::vector<double> forward(const NetworkParams& params, const NetworkSpec& spec,
                            const Matrix& x, ForwardCache* cache = nullptr);

// Reverse-mode gradients for the batch recorded in `cache`; dloss_dscore holds
// one partial per batch row. ReLU derivative at exactly 0 is taken as 0.
NetworkParams backward(const NetworkParams& params, const NetworkSpec& spec,
                       const ForwardCache& cache,
                       const std::vector<double>& dloss_dscore);

struct AdamState {
  std::size_t step = 0;
  std::vector<Layer> m, v;  // moment accumulators shaped like the params
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

AdamState adam_init(const NetworkParams& shape, double lr = 1e-3,
                    double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

// One bias-corrected Adam update, in place.
void adam_step(NetworkParams& params, const NetworkParams& grads, AdamState& state);

// Everything a stored model carries beyond the architecture: the training
// mode ("dr", "rdr" or "ksample"), the denominator mixture weight on the
// numerator sample, the seed, the ratio clamps, optional per-column z-scoring
// parameters, and optional content hashes of the training inputs.
struct ModelMeta {
  std::string mode = "rdr";
  double alpha = 0.5;
  std::uint64_t seed = 0;
  double g_min = 1e-4;
  double g_max = 1e4;
  double r_floor = 1e-6;
  std::vector<double> standardize_means;  // empty when z-scoring is off
  std::vector<double> standardize_stds;
  std::string train_hash_p;  // empty when unknown
  std::string train_hash_q;
};

// JSON document with shortest-round-trip floats; deserialize(serialize(m))
// reproduces every parameter bitwise.
std::string serialize(const NetworkParams& params, const NetworkSpec& spec,
                      const ModelMeta& meta = {});

struct StoredModel {
  NetworkParams params;
  NetworkSpec spec;
  ModelMeta meta;
};

StoredModel deserialize(const std::string& text);

}  // namespace rdr
