#include "network.hpp"

#include <limits>
#include <cmath>
#include <json.hpp>

namespace rdr {

namespace {

double head_value(Head head, double z) {
  switch (head) {
    case Head::bounded_softplus: {
      // NaN passes through so upstream blow-ups stay visible.
      if (std::isnan(z)) return z;
      const double s = stable_softplus(z);
      if (s == std::numeric_limits<double>::infinity())
        return std::nextafter(2.0, 0.0);
      const double out = 2.0 * s / (s + 1.0);
      // The true value sits strictly inside (0, 2) for every finite z; keep
      // it there when softplus underflows (z below about -745) or when 2s
      // overflows (z near the double ceiling, where the nearest double below
      // 2 is also the correctly rounded value).
      if (!(out > 0.0)) return std::numeric_limits<double>::min();
      if (out >= 2.0) return std::nextafter(2.0, 0.0);
      return out;
    }
    case Head::softplus_floor:
      // fmax would swallow a NaN; keep it visible instead.
      if (std::isnan(z)) return z;
      return std::fmax(stable_softplus(z), 1e-6);
    case Head::linear:
      return z;
  }
  throw Error("unreachable head");
}

double head_derivative(Head head, double z) {
  switch (head) {
    case Head::bounded_softplus: {
      const double s = stable_softplus(z);
      const double sigma = 1.0 / (1.0 + std::exp(-z));
      return 2.0 * sigma / ((s + 1.0) * (s + 1.0));
    }
    case Head::softplus_floor: {
      if (stable_softplus(z) <= 1e-6) return 0.0;
      return 1.0 / (1.0 + std::exp(-z));
    }
    case Head::linear:
      return 1.0;
  }
  throw Error("unreachable head");
}

}  // namespace

std::string head_name(Head h) {
  switch (h) {
    case Head::bounded_softplus: return "bounded_softplus";
    case Head::softplus_floor: return "softplus_floor";
    case Head::linear: return "linear";
  }
  throw Error("unreachable head");
}

Head head_from_name(const std::string& name) {
  if (name == "bounded_softplus") return Head::bounded_softplus;
  if (name == "softplus_floor") return Head::softplus_floor;
  if (name == "linear") return Head::linear;
  throw ParseError("unknown head name: '" + name + "'");
}

void validate_spec(const NetworkSpec& spec) {
  if (spec.input_dim < 1) throw ShapeError("network spec: input_dim must be >= 1");
  if (spec.hidden_widths.empty()) {
    throw ShapeError("network spec: at least one hidden layer is required");
  }
  for (std::size_t w : spec.hidden_widths) {
    if (w < 1) throw ShapeError("network spec: hidden widths must be >= 1");
  }
}

void validate_params(const NetworkParams& params, const NetworkSpec& spec) {
  validate_spec(spec);
  const std::size_t n_layers = spec.hidden_widths.size() + 1;
  if (params.layers.size() != n_layers) {
    throw ShapeError("network params: " + std::to_string(params.layers.size()) +
                     " layers, spec expects " + std::to_string(n_layers));
  }
  std::size_t in = spec.input_dim;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const std::size_t out = l < spec.hidden_widths.size() ? spec.hidden_widths[l] : 1;
    const Layer& layer = params.layers[l];
    if (layer.w.n_rows != out || layer.w.n_cols != in || layer.b.size() != out) {
      throw ShapeError("network params: layer " + std::to_string(l) + " is " +
                       std::to_string(layer.w.n_rows) + "x" + std::to_string(layer.w.n_cols) +
                       " with " + std::to_string(layer.b.size()) + " biases, expected " +
                       std::to_string(out) + "x" + std::to_string(in));
    }
    in = out;
  }
}

NetworkParams init_params(const NetworkSpec& spec, RngState& rng) {
  validate_spec(spec);
  NetworkParams params;
  std::size_t in = spec.input_dim;
  for (std::size_t l = 0; l <= spec.hidden_widths.size(); ++l) {
    const std::size_t out = l < spec.hidden_widths.size() ? spec.hidden_widths[l] : 1;
    Layer layer;
    layer.w = Matrix(out, in);
    const double scale = std::sqrt(2.0 / static_cast<double>(in));
    for (auto& v : layer.w.data) v = scale * rng.next_normal();
    layer.b.assign(out, 0.0);
    params.layers.push_back(std::move(layer));
    in = out;
  }
  return params;
}

std::vector<double> forward(const NetworkParams& params, const NetworkSpec& spec,
                            const Matrix& x, ForwardCache* cache) {
  validate_params(params, spec);
  if (x.n_cols != spec.input_dim) {
    throw ShapeError("forward: input has " + std::to_string(x.n_cols) +
                     " columns, spec expects " + std::to_string(spec.input_dim));
  }
  if (cache) {
    cache->acts.clear();
    cache->pres.clear();
    cache->acts.push_back(x);
  }
  Matrix act = x;
  const std::size_t n_layers = params.layers.size();
  for (std::size_t l = 0; l < n_layers; ++l) {
    Matrix z = affine(act, params.layers[l].w, params.layers[l].b);
    if (cache) cache->pres.push_back(z);
    if (l + 1 < n_layers) {
      for (auto& v : z.data) v = v > 0.0 ? v : 0.0;
      if (cache) cache->acts.push_back(z);
      act = std::move(z);
    } else {
      std::vector<double> scores(z.n_rows);
      for (std::size_t i = 0; i < z.n_rows; ++i) scores[i] = head_value(spec.head, z.at(i, 0));
      return scores;
    }
  }
  throw Error("unreachable: empty network");
}

NetworkParams backward(const NetworkParams& params, const NetworkSpec& spec,
                       const ForwardCache& cache,
                       const std::vector<double>& dloss_dscore) {
  const std::size_t n_layers = params.layers.size();
  if (cache.pres.size() != n_layers || cache.acts.size() != n_layers) {
    throw ShapeError("backward: cache does not match the network depth");
  }
  const std::size_t n = cache.acts[0].n_rows;
  if (dloss_dscore.size() != n) {
    throw ShapeError("backward: " + std::to_string(dloss_dscore.size()) +
                     " score partials for a batch of " + std::to_string(n));
  }

  NetworkParams grads;
  grads.layers.resize(n_layers);

  // Seed the chain with the head derivative.
  Matrix dz(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    dz.at(i, 0) = dloss_dscore[i] * head_derivative(spec.head, cache.pres[n_layers - 1].at(i, 0));
  }

  for (std::size_t l = n_layers; l-- > 0;) {
    const Matrix& input = cache.acts[l];  // activations feeding layer l
    const Layer& layer = params.layers[l];
    Layer& grad = grads.layers[l];
    grad.w = Matrix(layer.w.n_rows, layer.w.n_cols);
    grad.b.assign(layer.b.size(), 0.0);
    for (std::size_t r = 0; r < layer.w.n_rows; ++r) {
      for (std::size_t j = 0; j < layer.w.n_cols; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += dz.at(i, r) * input.at(i, j);
        grad.w.at(r, j) = acc;
      }
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) acc += dz.at(i, r);
      grad.b[r] = acc;
    }
    if (l == 0) break;
    Matrix dprev(n, layer.w.n_cols);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < layer.w.n_cols; ++j) {
        double acc = 0.0;
        for (std::size_t r = 0; r < layer.w.n_rows; ++r) acc += dz.at(i, r) * layer.w.at(r, j);
        // ReLU mask from the previous layer's pre-activation; 0 stays 0.
        dprev.at(i, j) = cache.pres[l - 1].at(i, j) > 0.0 ? acc : 0.0;
      }
    }
    dz = std::move(dprev);
  }
  return grads;
}

AdamState adam_init(const NetworkParams& shape, double lr, double beta1,
                    double beta2, double eps) {
  AdamState st;
  st.lr = lr;
  st.beta1 = beta1;
  st.beta2 = beta2;
  st.eps = eps;
  for (const Layer& layer : shape.layers) {
    Layer zero;
    zero.w = Matrix(layer.w.n_rows, layer.w.n_cols);
    zero.b.assign(layer.b.size(), 0.0);
    st.m.push_back(zero);
    st.v.push_back(std::move(zero));
  }
  return st;
}

void adam_step(NetworkParams& params, const NetworkParams& grads, AdamState& state) {
  if (grads.layers.size() != params.layers.size() || state.m.size() != params.layers.size()) {
    throw ShapeError("adam_step: mismatched layer counts");
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  auto update = [&](double& p, double g, double& m, double& v) {
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g * g;
    const double mhat = m / bc1;
    const double vhat = v / bc2;
    p -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
  };
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    Layer& pl = params.layers[l];
    const Layer& gl = grads.layers[l];
    if (gl.w.data.size() != pl.w.data.size() || gl.b.size() != pl.b.size()) {
      throw ShapeError("adam_step: gradient shape differs at layer " + std::to_string(l));
    }
    for (std::size_t k = 0; k < pl.w.data.size(); ++k) {
      update(pl.w.data[k], gl.w.data[k], state.m[l].w.data[k], state.v[l].w.data[k]);
    }
    for (std::size_t k = 0; k < pl.b.size(); ++k) {
      update(pl.b[k], gl.b[k], state.m[l].b[k], state.v[l].b[k]);
    }
  }
}

std::string serialize(const NetworkParams& params, const NetworkSpec& spec,
                      const ModelMeta& meta) {
  validate_params(params, spec);
  nlohmann::json doc;
  doc["spec"]["input_dim"] = spec.input_dim;
  doc["spec"]["hidden_widths"] = spec.hidden_widths;
  doc["spec"]["head"] = head_name(spec.head);
  nlohmann::json layers = nlohmann::json::array();
  for (const Layer& layer : params.layers) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t r = 0; r < layer.w.n_rows; ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (std::size_t j = 0; j < layer.w.n_cols; ++j) row.push_back(layer.w.at(r, j));
      rows.push_back(std::move(row));
    }
    layers.push_back({{"w", std::move(rows)}, {"b", layer.b}});
  }
  doc["layers"] = std::move(layers);
  doc["meta"]["mode"] = meta.mode;
  doc["meta"]["alpha"] = meta.alpha;
  doc["meta"]["seed"] = meta.seed;
  doc["meta"]["clamps"] = {{"g_min", meta.g_min}, {"g_max", meta.g_max}, {"r_floor", meta.r_floor}};
  if (meta.standardize_means.empty()) {
    doc["meta"]["standardize"] = nullptr;
  } else {
    doc["meta"]["standardize"] = {{"means", meta.standardize_means},
                                  {"stds", meta.standardize_stds}};
  }
  if (meta.train_hash_p.empty() && meta.train_hash_q.empty()) {
    doc["meta"]["train_hashes"] = nullptr;
  } else {
    doc["meta"]["train_hashes"] = {{"p", meta.train_hash_p}, {"q", meta.train_hash_q}};
  }
  return doc.dump();
}

StoredModel deserialize(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("model document: ") + e.what());
  }
  StoredModel model;
  try {
    const auto& spec = doc.at("spec");
    model.spec.input_dim = spec.at("input_dim").get<std::size_t>();
    model.spec.hidden_widths = spec.at("hidden_widths").get<std::vector<std::size_t>>();
    model.spec.head = head_from_name(spec.at("head").get<std::string>());
    for (const auto& jlayer : doc.at("layers")) {
      Layer layer;
      const auto& rows = jlayer.at("w");
      layer.w.n_rows = rows.size();
      layer.w.n_cols = rows.empty() ? 0 : rows.at(0).size();
      for (const auto& row : rows) {
        if (row.size() != layer.w.n_cols) {
          throw ParseError("model document: ragged weight matrix");
        }
        for (const auto& v : row) layer.w.data.push_back(v.get<double>());
      }
      layer.b = jlayer.at("b").get<std::vector<double>>();
      model.params.layers.push_back(std::move(layer));
    }
    const auto& meta = doc.at("meta");
    model.meta.mode = meta.at("mode").get<std::string>();
    model.meta.alpha = meta.at("alpha").get<double>();
    model.meta.seed = meta.at("seed").get<std::uint64_t>();
    const auto& clamps = meta.at("clamps");
    model.meta.g_min = clamps.at("g_min").get<double>();
    model.meta.g_max = clamps.at("g_max").get<double>();
    model.meta.r_floor = clamps.at("r_floor").get<double>();
    if (meta.contains("standardize") && !meta.at("standardize").is_null()) {
      model.meta.standardize_means = meta.at("standardize").at("means").get<std::vector<double>>();
      model.meta.standardize_stds = meta.at("standardize").at("stds").get<std::vector<double>>();
      if (model.meta.standardize_means.size() != model.meta.standardize_stds.size()) {
        throw ParseError("model document: standardize means/stds length mismatch");
      }
    }
    if (meta.contains("train_hashes") && !meta.at("train_hashes").is_null()) {
      model.meta.train_hash_p = meta.at("train_hashes").at("p").get<std::string>();
      model.meta.train_hash_q = meta.at("train_hashes").at("q").get<std::string>();
    }
  } catch (const ParseError&) {
    throw;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model document: ") + e.what());
  }
  try {
    validate_params(model.params, model.spec);
  } catch (const ShapeError& e) {
    throw ParseError(std::string("model document: ") + e.what());
  }
  if (model.meta.mode != "dr" && model.meta.mode != "rdr" && model.meta.mode != "ksample") {
    throw ParseError("model document: unknown mode '" + model.meta.mode + "'");
  }
  return model;
}

}  // namespace rdr
