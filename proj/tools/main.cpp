// Command-line front end. Links only the public C API plus local CSV
// plumbing; all numeric work happens behind rdr/rdr.h.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <rdr/rdr.h>

#include "csvio.hpp"

using cli::CliError;
using nlohmann::json;

namespace {

int g_argc = 0;
char** g_argv = nullptr;

template <typename T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(Handle&& o) noexcept : p(o.p) { o.p = nullptr; }
  Handle& operator=(Handle&& o) noexcept {
    if (this != &o) {
      reset();
      p = o.p;
      o.p = nullptr;
    }
    return *this;
  }
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { reset(); }
  void reset() {
    if (p != nullptr) Free(p);
    p = nullptr;
  }
  T** out() {
    reset();
    return &p;
  }
};

using MatrixPtr = Handle<rdr_matrix, rdr_matrix_free>;
using ModelPtr = Handle<rdr_model, rdr_model_free>;
using ScenarioPtr = Handle<rdr_scenario, rdr_scenario_free>;
using AttributionPtr = Handle<rdr_attribution, rdr_attribution_free>;
using AssociationPtr = Handle<rdr_association, rdr_association_free>;

void check(rdr_status s) {
  if (s == RDR_OK) return;
  throw CliError(s == RDR_ERR_NUMERIC ? 4 : 3, rdr_last_error());
}

MatrixPtr to_matrix(const cli::Dataset& d, const std::string& path) {
  if (d.rows == 0) throw CliError(3, path + ": no data rows");
  if (d.columns.empty()) throw CliError(3, path + ": no feature columns");
  MatrixPtr m;
  check(rdr_matrix_new(d.rows, d.columns.size(), d.values.data(), m.out()));
  for (std::size_t j = 0; j < d.columns.size(); ++j) {
    check(rdr_matrix_set_name(m.p, j, d.columns[j].c_str()));
  }
  return m;
}

std::vector<std::string> row_ids(const cli::Dataset& d) {
  if (d.has_ids) return d.ids;
  std::vector<std::string> ids(d.rows);
  for (std::size_t i = 0; i < d.rows; ++i) ids[i] = std::to_string(i);
  return ids;
}

std::string scores_csv(const std::vector<std::string>& ids,
                       const std::vector<double>& scores,
                       const std::string& label) {
  std::string out = "id,score,source_label\n";
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out += ids[i];
    out += ',';
    out += cli::format_double(scores[i]);
    out += ',';
    out += label;
    out += '\n';
  }
  return out;
}

std::optional<std::uint64_t> env_seed() {
  const char* raw = std::getenv("RDR_SEED");
  if (raw == nullptr) return std::nullopt;
  const std::string text(raw);
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return static_cast<std::uint64_t>(v);
  } catch (const std::exception&) {
    throw CliError(2, "RDR_SEED: cannot parse '" + text +
                          "' as an unsigned integer");
  }
}

// Precedence: explicit flag, then config, then RDR_SEED, then 0.
std::uint64_t resolve_seed(bool flag_given, std::uint64_t flag_value,
                           bool config_given, std::uint64_t config_value) {
  if (flag_given) return flag_value;
  if (config_given) return config_value;
  if (const auto env = env_seed()) return *env;
  return 0;
}

void write_manifest(const std::string& dir, std::uint64_t seed,
                    const std::vector<std::string>& input_paths) {
  json m;
  json invocation = json::array();
  for (int i = 0; i < g_argc; ++i) invocation.push_back(g_argv[i]);
  m["invocation"] = invocation;
  m["seed"] = seed;
  json inputs = json::object();
  for (const std::string& path : input_paths) {
    inputs[path] = cli::fnv1a64_file(path);
  }
  m["inputs"] = inputs;
  cli::write_file(dir + "/manifest.json", m.dump(2) + "\n");
}

std::string output_dir_of(const std::string& file_path) {
  const std::string dir = std::filesystem::path(file_path).parent_path();
  return dir.empty() ? std::string(".") : dir;
}

void print_result(const json& j) { std::cout << j.dump() << "\n"; }

// ---------- run configuration ----------

struct RunConfig {
  std::string mode = "rdr";
  double alpha = 0.5;
  std::uint64_t epochs = 0;
  std::uint64_t batch_size = 0;
  std::uint64_t seed = 0;
  bool seed_given = false;
  double holdout_fraction = 0.0;
  double learning_rate = 0.0;
  bool standardize = false;
  std::vector<std::size_t> hidden_widths;
  std::string p, q, out_model, trace;
};

RunConfig default_run_config() {
  rdr_train_config base;
  rdr_train_config_init(&base);
  RunConfig rc;
  rc.alpha = base.alpha;
  rc.epochs = base.epochs;
  rc.batch_size = base.batch_size;
  rc.holdout_fraction = base.holdout_fraction;
  rc.learning_rate = base.learning_rate;
  rc.standardize = base.standardize != 0;
  return rc;
}

RunConfig load_run_config(const std::string& path) {
  json doc;
  try {
    doc = json::parse(cli::slurp(path));
  } catch (const json::exception& e) {
    throw CliError(3, path + ": " + e.what());
  }
  if (!doc.is_object()) throw CliError(3, path + ": config must be an object");

  static const std::vector<std::string> known = {
      "schema_version", "mode",          "alpha",
      "epochs",         "batch_size",    "seed",
      "holdout_fraction", "learning_rate", "standardize",
      "hidden_widths",  "p",             "q",
      "out_model",      "trace"};
  for (const auto& [key, value] : doc.items()) {
    (void)value;
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw CliError(3, path + ": unknown config field '" + key + "'");
    }
  }
  if (!doc.contains("schema_version") || !doc["schema_version"].is_string()) {
    throw CliError(3, path + ": schema_version (string) is required");
  }
  if (doc["schema_version"].get<std::string>() != "1") {
    throw CliError(3, path + ": unsupported schema_version '" +
                          doc["schema_version"].get<std::string>() +
                          "', expected \"1\"");
  }

  RunConfig rc = default_run_config();
  const auto want = [&](const char* key, bool ok) {
    if (!ok) throw CliError(3, path + ": bad type for '" + key + "'");
  };
  if (doc.contains("mode")) {
    want("mode", doc["mode"].is_string());
    rc.mode = doc["mode"].get<std::string>();
    if (rc.mode != "dr" && rc.mode != "rdr") {
      throw CliError(3, path + ": mode must be dr or rdr");
    }
  }
  if (doc.contains("alpha")) {
    want("alpha", doc["alpha"].is_number());
    rc.alpha = doc["alpha"].get<double>();
  }
  if (doc.contains("epochs")) {
    want("epochs", doc["epochs"].is_number_unsigned());
    rc.epochs = doc["epochs"].get<std::uint64_t>();
  }
  if (doc.contains("batch_size")) {
    want("batch_size", doc["batch_size"].is_number_unsigned());
    rc.batch_size = doc["batch_size"].get<std::uint64_t>();
  }
  if (doc.contains("seed")) {
    want("seed", doc["seed"].is_number_unsigned());
    rc.seed = doc["seed"].get<std::uint64_t>();
    rc.seed_given = true;
  }
  if (doc.contains("holdout_fraction")) {
    want("holdout_fraction", doc["holdout_fraction"].is_number());
    rc.holdout_fraction = doc["holdout_fraction"].get<double>();
  }
  if (doc.contains("learning_rate")) {
    want("learning_rate", doc["learning_rate"].is_number());
    rc.learning_rate = doc["learning_rate"].get<double>();
  }
  if (doc.contains("standardize")) {
    want("standardize", doc["standardize"].is_boolean());
    rc.standardize = doc["standardize"].get<bool>();
  }
  if (doc.contains("hidden_widths")) {
    want("hidden_widths", doc["hidden_widths"].is_array());
    for (const auto& w : doc["hidden_widths"]) {
      want("hidden_widths", w.is_number_unsigned());
      const std::uint64_t width = w.get<std::uint64_t>();
      if (width == 0) throw CliError(3, path + ": hidden width must be >= 1");
      rc.hidden_widths.push_back(static_cast<std::size_t>(width));
    }
  }
  const auto take_path = [&](const char* key, std::string& slot) {
    if (doc.contains(key)) {
      want(key, doc[key].is_string());
      slot = doc[key].get<std::string>();
    }
  };
  take_path("p", rc.p);
  take_path("q", rc.q);
  take_path("out_model", rc.out_model);
  take_path("trace", rc.trace);
  return rc;
}

rdr_train_config to_train_config(const RunConfig& rc, std::uint64_t seed) {
  rdr_train_config tc;
  rdr_train_config_init(&tc);
  tc.mode = rc.mode == "dr" ? RDR_MODE_DR : RDR_MODE_RDR;
  tc.alpha = rc.alpha;
  tc.epochs = rc.epochs;
  tc.batch_size = rc.batch_size;
  tc.seed = seed;
  tc.holdout_fraction = rc.holdout_fraction;
  tc.learning_rate = rc.learning_rate;
  tc.standardize = rc.standardize ? 1 : 0;
  if (!rc.hidden_widths.empty()) {
    tc.hidden_widths = rc.hidden_widths.data();
    tc.n_hidden = rc.hidden_widths.size();
  }
  return tc;
}

json loss_report_json(double loss, double h2_raw, double h2_clipped,
                      std::uint64_t n_p, std::uint64_t n_q) {
  json j;
  j["loss"] = loss;
  j["h2_raw"] = h2_raw;
  j["h2_clipped"] = h2_clipped;
  j["n_p"] = n_p;
  j["n_q"] = n_q;
  return j;
}

// ---------- synth ----------

struct SynthOpts {
  std::string scenario;
  double delta = 0.0;
  bool delta_given = false;
  std::string beta_case;
  std::size_t n_p = 0;
  std::size_t n_q = 0;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out_dir;
  std::size_t grid_points = 1001;
};

void run_synth(const SynthOpts& o) {
  std::string kind = o.scenario;
  std::replace(kind.begin(), kind.end(), '-', '_');

  ScenarioPtr s;
  if (kind == "gauss_shift") {
    if (!o.delta_given) {
      throw CliError(2, "--delta is required for --scenario gauss-shift");
    }
    if (!o.beta_case.empty()) {
      throw CliError(2, "--case does not apply to --scenario gauss-shift");
    }
    check(rdr_scenario_gauss_shift(o.delta, s.out()));
  } else if (kind == "beta_mixture") {
    if (o.beta_case.empty()) {
      throw CliError(2, "--case is required for --scenario beta-mixture");
    }
    if (o.delta_given) {
      throw CliError(2, "--delta does not apply to --scenario beta-mixture");
    }
    check(rdr_scenario_beta_mixture(o.beta_case.c_str(), s.out()));
  } else {
    throw CliError(2, "--scenario must be gauss-shift or beta-mixture");
  }
  if (o.n_p == 0 || o.n_q == 0) {
    throw CliError(2, "--n-p and --n-q must be at least 1");
  }
  if (o.grid_points < 2) throw CliError(2, "--grid-points must be at least 2");

  const std::uint64_t seed = resolve_seed(o.seed_given, o.seed, false, 0);

  MatrixPtr xp, xq;
  check(rdr_scenario_sample(s.p, o.n_p, o.n_q, seed, xp.out(), xq.out()));

  std::error_code ec;
  std::filesystem::create_directories(o.out_dir, ec);
  if (ec) throw CliError(3, "cannot create " + o.out_dir + ": " + ec.message());

  const auto write_sample = [&](const char* name, const MatrixPtr& m,
                                std::size_t n) {
    std::vector<double> buf(n);
    check(rdr_matrix_copy_data(m.p, buf.data()));
    std::string text = "x\n";
    for (const double v : buf) {
      text += cli::format_double(v);
      text += '\n';
    }
    cli::write_file(o.out_dir + "/" + name, text);
  };
  write_sample("xp.csv", xp, o.n_p);
  write_sample("xq.csv", xq, o.n_q);

  std::vector<double> gx(o.grid_points), gp(o.grid_points), gq(o.grid_points),
      gg(o.grid_points), gr(o.grid_points);
  check(rdr_scenario_oracle(s.p, o.grid_points, gx.data(), gp.data(),
                            gq.data(), gg.data(), gr.data()));
  std::string oracle = "x,p,q,g,r\n";
  for (std::size_t k = 0; k < o.grid_points; ++k) {
    oracle += cli::format_double(gx[k]);
    oracle += ',';
    oracle += cli::format_double(gp[k]);
    oracle += ',';
    oracle += cli::format_double(gq[k]);
    oracle += ',';
    oracle += cli::format_double(gg[k]);
    oracle += ',';
    oracle += cli::format_double(gr[k]);
    oracle += '\n';
  }
  cli::write_file(o.out_dir + "/oracle.csv", oracle);

  write_manifest(o.out_dir, seed, {});

  json j;
  j["command"] = "synth";
  j["out_dir"] = o.out_dir;
  j["xp_rows"] = o.n_p;
  j["xq_rows"] = o.n_q;
  j["oracle_rows"] = o.grid_points;
  print_result(j);
}

// ---------- train ----------

struct TrainOpts {
  std::string p, q, mode, config, out_model, trace;
  double alpha = 0.5;
  bool alpha_given = false;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

void run_train(const TrainOpts& o) {
  RunConfig rc =
      o.config.empty() ? default_run_config() : load_run_config(o.config);
  if (!o.mode.empty()) rc.mode = o.mode;
  if (o.alpha_given) rc.alpha = o.alpha;
  const std::string p_path = o.p.empty() ? rc.p : o.p;
  const std::string q_path = o.q.empty() ? rc.q : o.q;
  const std::string out_model = o.out_model.empty() ? rc.out_model : o.out_model;
  const std::string trace_path = o.trace.empty() ? rc.trace : o.trace;
  if (p_path.empty()) throw CliError(2, "--p is required (flag or config)");
  if (q_path.empty()) throw CliError(2, "--q is required (flag or config)");
  if (out_model.empty()) {
    throw CliError(2, "--out-model is required (flag or config)");
  }

  const std::uint64_t seed =
      resolve_seed(o.seed_given, o.seed, rc.seed_given, rc.seed);

  const cli::Dataset dp = cli::read_dataset(p_path);
  const cli::Dataset dq = cli::read_dataset(q_path);
  const MatrixPtr xp = to_matrix(dp, p_path);
  const MatrixPtr xq = to_matrix(dq, q_path);

  const rdr_train_config tc = to_train_config(rc, seed);
  std::vector<double> train_trace(tc.epochs, 0.0);
  std::vector<double> holdout_trace(tc.epochs, 0.0);
  std::size_t best_epoch = 0;

  ModelPtr model;
  check(rdr_train(xp.p, xq.p, &tc, model.out(), train_trace.data(),
                  holdout_trace.data(), &best_epoch));
  check(rdr_model_set_train_hashes(model.p, cli::fnv1a64_file(p_path).c_str(),
                                   cli::fnv1a64_file(q_path).c_str()));

  char* text = nullptr;
  check(rdr_model_to_json(model.p, &text));
  std::string model_text(text);
  rdr_string_free(text);
  if (model_text.empty() || model_text.back() != '\n') model_text += '\n';
  cli::write_file(out_model, model_text);

  if (!trace_path.empty()) {
    std::string trace = "epoch,train_loss,holdout_loss\n";
    for (std::size_t e = 0; e < train_trace.size(); ++e) {
      trace += std::to_string(e);
      trace += ',';
      trace += cli::format_double(train_trace[e]);
      trace += ',';
      trace += cli::format_double(holdout_trace[e]);
      trace += '\n';
    }
    cli::write_file(trace_path, trace);
  }
  std::cerr << "best epoch " << best_epoch << "\n";

  std::vector<std::string> inputs = {p_path, q_path};
  if (!o.config.empty()) inputs.push_back(o.config);
  write_manifest(output_dir_of(out_model), seed, inputs);

  double loss = 0.0;
  double h2_raw = 0.0;
  double h2_clipped = 0.0;
  std::uint64_t n_p = 0;
  std::uint64_t n_q = 0;
  check(rdr_model_holdout_report(model.p, &loss, &h2_raw, &h2_clipped, &n_p,
                                 &n_q));
  print_result(loss_report_json(loss, h2_raw, h2_clipped, n_p, n_q));
}

// ---------- eval ----------

struct EvalOpts {
  std::string model, data, out;
  std::string label = "other";
  bool allow_train_eval = false;
};

void run_eval(const EvalOpts& o) {
  ModelPtr model;
  check(rdr_model_from_json(cli::slurp(o.model).c_str(), model.out()));

  const std::string data_hash = cli::fnv1a64_file(o.data);
  const char* hash_p = nullptr;
  const char* hash_q = nullptr;
  check(rdr_model_train_hashes(model.p, &hash_p, &hash_q));
  if (!o.allow_train_eval &&
      (data_hash == hash_p || data_hash == hash_q)) {
    throw CliError(3, o.data +
                          " matches a training input of this model; pass "
                          "--allow-train-eval to score it anyway");
  }

  const cli::Dataset d = cli::read_dataset(o.data);
  const MatrixPtr x = to_matrix(d, o.data);
  std::vector<double> scores(d.rows, 0.0);
  check(rdr_model_eval(model.p, x.p, scores.data()));

  cli::write_file(o.out, scores_csv(row_ids(d), scores, o.label));
  write_manifest(output_dir_of(o.out), 0, {o.model, o.data});

  const double mean =
      std::accumulate(scores.begin(), scores.end(), 0.0) /
      static_cast<double>(scores.size());
  json j;
  j["command"] = "eval";
  j["n"] = d.rows;
  j["mean_score"] = mean;
  j["out"] = o.out;
  print_result(j);
}

// ---------- grid ----------

struct GridOpts {
  std::string model, out;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t points = 500;
};

void run_grid(const GridOpts& o) {
  if (o.points < 2) throw CliError(2, "--points must be at least 2");
  ModelPtr model;
  check(rdr_model_from_json(cli::slurp(o.model).c_str(), model.out()));

  std::vector<double> xs(o.points), scores(o.points);
  check(rdr_model_eval_grid(model.p, o.lo, o.hi, o.points, xs.data(),
                            scores.data()));
  std::string out = "x,score\n";
  for (std::size_t k = 0; k < o.points; ++k) {
    out += cli::format_double(xs[k]);
    out += ',';
    out += cli::format_double(scores[k]);
    out += '\n';
  }
  cli::write_file(o.out, out);
  write_manifest(output_dir_of(o.out), 0, {o.model});

  json j;
  j["command"] = "grid";
  j["points"] = o.points;
  j["out"] = o.out;
  print_result(j);
}

// ---------- compare ----------

struct CompareOpts {
  std::string p, q, config, out_dir;
  bool force = false;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

// Deterministic holdout split: shuffle indices, carve off the holdout,
// then restore file order within each part.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> outer_split(
    std::size_t n, double fraction, std::uint64_t seed, std::uint64_t side) {
  if (n < 2) throw CliError(3, "need at least 2 rows per side to split");
  std::size_t n_hold = static_cast<std::size_t>(fraction * static_cast<double>(n));
  n_hold = std::clamp<std::size_t>(n_hold, 1, n - 1);

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::uint64_t state = seed ^ (0xABCDEF0123456789ULL * (side + 1));
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::size_t j = cli::splitmix64(state) % (i + 1);
    std::swap(perm[i], perm[j]);
  }
  std::vector<std::size_t> hold(perm.begin(),
                                perm.begin() + static_cast<long>(n_hold));
  std::vector<std::size_t> rest(perm.begin() + static_cast<long>(n_hold),
                                perm.end());
  std::sort(hold.begin(), hold.end());
  std::sort(rest.begin(), rest.end());
  return {rest, hold};
}

MatrixPtr subset_matrix(const cli::Dataset& d,
                        const std::vector<std::size_t>& rows) {
  const std::size_t cols = d.columns.size();
  std::vector<double> buf;
  buf.reserve(rows.size() * cols);
  for (const std::size_t i : rows) {
    for (std::size_t j = 0; j < cols; ++j) buf.push_back(d.values[i * cols + j]);
  }
  MatrixPtr m;
  check(rdr_matrix_new(rows.size(), cols, buf.data(), m.out()));
  for (std::size_t j = 0; j < cols; ++j) {
    check(rdr_matrix_set_name(m.p, j, d.columns[j].c_str()));
  }
  return m;
}

void append_histogram_rows(std::string& out, const std::string& label,
                           const std::vector<double>& scores) {
  constexpr std::size_t kBins = 40;
  double edges[kBins + 1];
  std::uint64_t counts[kBins];
  std::uint64_t underflow = 0;
  std::uint64_t overflow = 0;
  double density[kBins];
  check(rdr_histogram(scores.data(), scores.size(), kBins, 0.0, 2.0, edges,
                      counts, &underflow, &overflow, density));
  const auto row = [&](double lo, double hi, std::uint64_t count, double dens) {
    out += label;
    out += ',';
    out += cli::format_double(lo);
    out += ',';
    out += cli::format_double(hi);
    out += ',';
    out += std::to_string(count);
    out += ',';
    out += cli::format_double(dens);
    out += '\n';
  };
  // Open-ended spill rows carry density 0 since they have no width.
  row(-std::numeric_limits<double>::infinity(), edges[0], underflow, 0.0);
  for (std::size_t b = 0; b < kBins; ++b) {
    row(edges[b], edges[b + 1], counts[b], density[b]);
  }
  row(edges[kBins], std::numeric_limits<double>::infinity(), overflow, 0.0);
}

void append_summary_row(std::string& out, const std::string& label,
                        const std::vector<double>& scores) {
  rdr_summary_stats st;
  check(rdr_summarize(scores.data(), scores.size(), &st));
  out += label;
  out += ',';
  out += std::to_string(st.length);
  for (const double v : {st.mean, st.std_dev, st.min, st.q1, st.median, st.q3,
                         st.max}) {
    out += ',';
    out += cli::format_double(v);
  }
  out += '\n';
}

void run_compare(const CompareOpts& o) {
  RunConfig rc =
      o.config.empty() ? default_run_config() : load_run_config(o.config);
  const std::string p_path = o.p.empty() ? rc.p : o.p;
  const std::string q_path = o.q.empty() ? rc.q : o.q;
  if (p_path.empty()) throw CliError(2, "--p is required (flag or config)");
  if (q_path.empty()) throw CliError(2, "--q is required (flag or config)");

  const std::array<const char*, 7> outputs = {
      "model.json",  "scores_p.csv", "scores_q.csv", "histogram.csv",
      "summary.csv", "loss.json",    "manifest.json"};
  std::error_code ec;
  std::filesystem::create_directories(o.out_dir, ec);
  if (ec) throw CliError(3, "cannot create " + o.out_dir + ": " + ec.message());
  if (!o.force) {
    for (const char* name : outputs) {
      if (std::filesystem::exists(o.out_dir + "/" + name)) {
        throw CliError(3, o.out_dir + "/" + name +
                              " already exists; pass --force to overwrite");
      }
    }
  }

  const std::uint64_t seed =
      resolve_seed(o.seed_given, o.seed, rc.seed_given, rc.seed);

  const cli::Dataset dp = cli::read_dataset(p_path);
  const cli::Dataset dq = cli::read_dataset(q_path);
  const auto [p_train, p_test] = outer_split(dp.rows, rc.holdout_fraction,
                                             seed, 0);
  const auto [q_train, q_test] = outer_split(dq.rows, rc.holdout_fraction,
                                             seed, 1);

  const MatrixPtr xp_train = subset_matrix(dp, p_train);
  const MatrixPtr xq_train = subset_matrix(dq, q_train);
  const MatrixPtr xp_test = subset_matrix(dp, p_test);
  const MatrixPtr xq_test = subset_matrix(dq, q_test);

  const rdr_train_config tc = to_train_config(rc, seed);
  ModelPtr model;
  check(rdr_train(xp_train.p, xq_train.p, &tc, model.out(), nullptr, nullptr,
                  nullptr));
  check(rdr_model_set_train_hashes(model.p, cli::fnv1a64_file(p_path).c_str(),
                                   cli::fnv1a64_file(q_path).c_str()));

  char* text = nullptr;
  check(rdr_model_to_json(model.p, &text));
  std::string model_text(text);
  rdr_string_free(text);
  if (model_text.empty() || model_text.back() != '\n') model_text += '\n';
  cli::write_file(o.out_dir + "/model.json", model_text);

  std::vector<double> scores_p(p_test.size(), 0.0);
  std::vector<double> scores_q(q_test.size(), 0.0);
  check(rdr_model_eval(model.p, xp_test.p, scores_p.data()));
  check(rdr_model_eval(model.p, xq_test.p, scores_q.data()));

  const std::vector<std::string> ids_p = row_ids(dp);
  const std::vector<std::string> ids_q = row_ids(dq);
  std::vector<std::string> test_ids_p, test_ids_q;
  for (const std::size_t i : p_test) test_ids_p.push_back(ids_p[i]);
  for (const std::size_t i : q_test) test_ids_q.push_back(ids_q[i]);
  cli::write_file(o.out_dir + "/scores_p.csv",
                  scores_csv(test_ids_p, scores_p, "real"));
  cli::write_file(o.out_dir + "/scores_q.csv",
                  scores_csv(test_ids_q, scores_q, "generated"));

  double loss = 0.0;
  double h2_raw = 0.0;
  double h2_clipped = 0.0;
  check(rdr_model_h2(model.p, xp_test.p, xq_test.p, &loss, &h2_raw,
                     &h2_clipped));
  const json report = loss_report_json(loss, h2_raw, h2_clipped,
                                       p_test.size(), q_test.size());
  cli::write_file(o.out_dir + "/loss.json", report.dump(2) + "\n");

  std::string hist = "label,bin_lo,bin_hi,count,density\n";
  append_histogram_rows(hist, "real", scores_p);
  append_histogram_rows(hist, "generated", scores_q);
  cli::write_file(o.out_dir + "/histogram.csv", hist);

  std::string summary = "label,n,mean,std_dev,min,q1,median,q3,max\n";
  append_summary_row(summary, "real", scores_p);
  append_summary_row(summary, "generated", scores_q);
  cli::write_file(o.out_dir + "/summary.csv", summary);

  std::vector<std::string> inputs = {p_path, q_path};
  if (!o.config.empty()) inputs.push_back(o.config);
  write_manifest(o.out_dir, seed, inputs);

  print_result(report);
}

// ---------- attribute ----------

struct AttributeOpts {
  std::string scores, covariates, method, mapping, out;
  bool clr = false;
  double threshold = 1.0;
};

std::vector<std::pair<std::string, std::string>> read_mapping(
    const std::string& path) {
  const std::string text = cli::slurp(path);
  std::vector<std::pair<std::string, std::string>> pairs;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++line_no;
    const std::size_t comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
      throw CliError(3, path + ": line " + std::to_string(line_no) +
                            ": expected exactly two columns");
    }
    pairs.emplace_back(line.substr(0, comma), line.substr(comma + 1));
  }
  if (pairs.empty()) throw CliError(3, path + ": empty mapping file");
  if (pairs.front().first != "column" || pairs.front().second != "group") {
    throw CliError(3, path + ": header must be column,group");
  }
  pairs.erase(pairs.begin());
  if (pairs.empty()) throw CliError(3, path + ": no mapping rows");
  return pairs;
}

void run_attribute(const AttributeOpts& o) {
  const cli::Dataset ds = cli::read_dataset(o.scores);
  const auto score_col = std::find(ds.columns.begin(), ds.columns.end(),
                                   "score");
  if (score_col == ds.columns.end()) {
    throw CliError(3, o.scores + ": no 'score' column");
  }
  const std::size_t score_idx =
      static_cast<std::size_t>(score_col - ds.columns.begin());
  if (ds.rows == 0) throw CliError(3, o.scores + ": no data rows");
  std::vector<double> scores(ds.rows);
  for (std::size_t i = 0; i < ds.rows; ++i) {
    scores[i] = ds.values[i * ds.columns.size() + score_idx];
  }

  cli::Dataset cov = cli::read_dataset(o.covariates);
  if (cov.rows == 0) throw CliError(3, o.covariates + ": no data rows");
  if (cov.columns.empty()) {
    throw CliError(3, o.covariates + ": no feature columns");
  }

  // Join on id when both sides carry one; otherwise require alignment.
  if (ds.has_ids && cov.has_ids) {
    std::map<std::string, std::size_t> by_id;
    for (std::size_t i = 0; i < cov.rows; ++i) {
      if (!by_id.emplace(cov.ids[i], i).second) {
        throw CliError(3, o.covariates + ": duplicate id '" + cov.ids[i] + "'");
      }
    }
    std::vector<std::size_t> order;
    std::string missing;
    std::size_t n_missing = 0;
    for (const std::string& id : ds.ids) {
      const auto it = by_id.find(id);
      if (it == by_id.end()) {
        ++n_missing;
        if (n_missing <= 20) {
          if (!missing.empty()) missing += ", ";
          missing += id;
        }
      } else {
        order.push_back(it->second);
      }
    }
    if (n_missing > 0) {
      if (n_missing > 20) missing += ", ...";
      throw CliError(3, std::to_string(n_missing) +
                            " score ids missing from " + o.covariates + ": " +
                            missing);
    }
    cli::Dataset joined;
    joined.columns = cov.columns;
    joined.rows = order.size();
    joined.values.reserve(order.size() * cov.columns.size());
    for (const std::size_t i : order) {
      for (std::size_t j = 0; j < cov.columns.size(); ++j) {
        joined.values.push_back(cov.values[i * cov.columns.size() + j]);
      }
    }
    cov = std::move(joined);
  } else if (cov.rows != ds.rows) {
    throw CliError(3, "row count mismatch: " + o.scores + " has " +
                          std::to_string(ds.rows) + " rows, " + o.covariates +
                          " has " + std::to_string(cov.rows) +
                          " and there is no shared id column to join on");
  }

  const MatrixPtr table = to_matrix(cov, o.covariates);
  json j;
  j["command"] = "attribute";
  j["method"] = o.method;
  j["out"] = o.out;

  if (o.method == "logistic") {
    if (o.clr || !o.mapping.empty()) {
      throw CliError(2, "--clr and --mapping apply to --method spearman");
    }
    AttributionPtr a;
    check(rdr_logistic_attribution(scores.data(), scores.size(), table.p,
                                   o.threshold, a.out()));
    std::size_t n_rows = 0;
    check(rdr_attribution_count(a.p, &n_rows));
    std::string out = "name,coef,std_error,z,p_value\n";
    const auto append = [&](const char* name, double coef, double se, double z,
                            double p_value) {
      out += name;
      for (const double v : {coef, se, z, p_value}) {
        out += ',';
        out += cli::format_double(v);
      }
      out += '\n';
    };
    for (std::size_t r = 0; r < n_rows; ++r) {
      const char* name = nullptr;
      double coef = 0.0, se = 0.0, z = 0.0, p_value = 0.0;
      check(rdr_attribution_row(a.p, r, &name, &coef, &se, &z, &p_value));
      append(name, coef, se, z, p_value);
    }
    double coef = 0.0, se = 0.0, z = 0.0, p_value = 0.0;
    check(rdr_attribution_intercept(a.p, &coef, &se, &z, &p_value));
    append("(intercept)", coef, se, z, p_value);
    cli::write_file(o.out, out);

    int converged = 0;
    int separation = 0;
    std::uint64_t iterations = 0;
    check(rdr_attribution_flags(a.p, &converged, &separation, &iterations));
    j["rows"] = n_rows;
    j["converged"] = converged != 0;
    j["separation"] = separation != 0;
    j["iterations"] = iterations;
  } else if (o.method == "spearman" && o.clr) {
    if (o.mapping.empty()) {
      throw CliError(2, "--mapping is required with --clr");
    }
    const auto pairs = read_mapping(o.mapping);
    std::vector<const char*> cols, groups;
    for (const auto& [col, group] : pairs) {
      cols.push_back(col.c_str());
      groups.push_back(group.c_str());
    }
    AssociationPtr scan;
    check(rdr_association_scan(scores.data(), scores.size(), table.p,
                               cols.data(), groups.data(), pairs.size(), 1e-6,
                               scan.out()));
    std::size_t n_entries = 0;
    check(rdr_association_count(scan.p, &n_entries));
    std::string out = "group,rho,p_value\n";
    for (std::size_t r = 0; r < n_entries; ++r) {
      const char* group = nullptr;
      double rho = 0.0, p_value = 0.0;
      check(rdr_association_entry(scan.p, r, &group, &rho, &p_value));
      out += group;
      out += ',';
      out += cli::format_double(rho);
      out += ',';
      out += cli::format_double(p_value);
      out += '\n';
    }
    cli::write_file(o.out, out);
    j["rows"] = n_entries;
    j["clr"] = true;
  } else if (o.method == "spearman") {
    struct Entry {
      std::string name;
      double rho, p_value;
    };
    std::vector<Entry> entries;
    std::vector<double> column(cov.rows);
    for (std::size_t c = 0; c < cov.columns.size(); ++c) {
      for (std::size_t i = 0; i < cov.rows; ++i) {
        column[i] = cov.values[i * cov.columns.size() + c];
      }
      double rho = 0.0, p_value = 0.0;
      check(rdr_spearman(column.data(), scores.data(), cov.rows, &rho,
                         &p_value));
      entries.push_back({cov.columns[c], rho, p_value});
    }
    std::stable_sort(entries.begin(), entries.end(),
                     [](const Entry& a, const Entry& b) {
                       if (std::fabs(a.rho) != std::fabs(b.rho)) {
                         return std::fabs(a.rho) > std::fabs(b.rho);
                       }
                       return a.name < b.name;
                     });
    std::string out = "name,rho,p_value,n\n";
    for (const Entry& e : entries) {
      out += e.name;
      out += ',';
      out += cli::format_double(e.rho);
      out += ',';
      out += cli::format_double(e.p_value);
      out += ',';
      out += std::to_string(cov.rows);
      out += '\n';
    }
    cli::write_file(o.out, out);
    j["rows"] = entries.size();
    j["clr"] = false;
  } else {
    throw CliError(2, "--method must be logistic or spearman");
  }

  std::vector<std::string> inputs = {o.scores, o.covariates};
  if (!o.mapping.empty()) inputs.push_back(o.mapping);
  write_manifest(output_dir_of(o.out), 0, inputs);
  print_result(j);
}

}  // namespace

int main(int argc, char** argv) {
  g_argc = argc;
  g_argv = argv;

  CLI::App app{"two-sample density ratio estimation and diagnostics"};
  app.require_subcommand(1);

  SynthOpts synth;
  CLI::App* cmd_synth = app.add_subcommand(
      "synth", "draw samples and oracle curves from a built-in scenario");
  cmd_synth->add_option("--scenario", synth.scenario,
                        "gauss-shift or beta-mixture")
      ->required();
  auto* delta_opt = cmd_synth->add_option("--delta", synth.delta,
                                          "mean shift for gauss-shift");
  cmd_synth->add_option("--case", synth.beta_case,
                        "partial-precision, partial-recall or mode-reweight");
  cmd_synth->add_option("--n-p", synth.n_p, "rows for xp.csv")->required();
  cmd_synth->add_option("--n-q", synth.n_q, "rows for xq.csv")->required();
  auto* synth_seed = cmd_synth->add_option("--seed", synth.seed, "random seed");
  cmd_synth->add_option("--out-dir", synth.out_dir, "output directory")
      ->required();
  cmd_synth->add_option("--grid-points", synth.grid_points,
                        "rows in oracle.csv");

  TrainOpts train;
  CLI::App* cmd_train = app.add_subcommand(
      "train", "fit a ratio model on two sample files");
  cmd_train->add_option("--p", train.p, "numerator sample CSV");
  cmd_train->add_option("--q", train.q, "denominator sample CSV");
  cmd_train->add_option("--mode", train.mode, "dr or rdr")
      ->check(CLI::IsMember({"dr", "rdr"}));
  auto* alpha_opt =
      cmd_train->add_option("--alpha", train.alpha, "mixture weight");
  cmd_train->add_option("--config", train.config, "run config JSON");
  cmd_train->add_option("--out-model", train.out_model, "model JSON path");
  cmd_train->add_option("--trace", train.trace, "per-epoch loss CSV path");
  auto* train_seed = cmd_train->add_option("--seed", train.seed, "random seed");

  EvalOpts eval;
  CLI::App* cmd_eval =
      app.add_subcommand("eval", "score a sample file with a saved model");
  cmd_eval->add_option("--model", eval.model, "model JSON path")->required();
  cmd_eval->add_option("--data", eval.data, "sample CSV")->required();
  cmd_eval->add_option("--out", eval.out, "score CSV path")->required();
  cmd_eval->add_option("--label", eval.label, "source label for the output")
      ->check(CLI::IsMember({"real", "generated", "other"}));
  cmd_eval->add_flag("--allow-train-eval", eval.allow_train_eval,
                     "permit scoring a file the model was trained on");

  GridOpts grid;
  CLI::App* cmd_grid =
      app.add_subcommand("grid", "score an evenly spaced 1-d grid");
  cmd_grid->add_option("--model", grid.model, "model JSON path")->required();
  cmd_grid->add_option("--lo", grid.lo, "grid start")->required();
  cmd_grid->add_option("--hi", grid.hi, "grid end")->required();
  cmd_grid->add_option("--points", grid.points, "grid size");
  cmd_grid->add_option("--out", grid.out, "grid CSV path")->required();

  CompareOpts compare;
  CLI::App* cmd_compare = app.add_subcommand(
      "compare", "split, train and report divergence in one step");
  cmd_compare->add_option("--p", compare.p, "numerator sample CSV");
  cmd_compare->add_option("--q", compare.q, "denominator sample CSV");
  cmd_compare->add_option("--config", compare.config, "run config JSON");
  cmd_compare->add_option("--out-dir", compare.out_dir, "output directory")
      ->required();
  cmd_compare->add_flag("--force", compare.force,
                        "overwrite results in the output directory");
  auto* compare_seed =
      cmd_compare->add_option("--seed", compare.seed, "random seed");

  AttributeOpts attribute;
  CLI::App* cmd_attribute = app.add_subcommand(
      "attribute", "relate scores to covariates or compositions");
  cmd_attribute->add_option("--scores", attribute.scores, "score CSV")
      ->required();
  cmd_attribute
      ->add_option("--covariates", attribute.covariates, "covariate CSV")
      ->required();
  cmd_attribute->add_option("--method", attribute.method,
                            "logistic or spearman")
      ->required();
  cmd_attribute->add_flag("--clr", attribute.clr,
                          "treat covariates as a composition");
  cmd_attribute->add_option("--mapping", attribute.mapping,
                            "column,group CSV for --clr");
  cmd_attribute->add_option("--out", attribute.out, "report CSV path")
      ->required();
  cmd_attribute->add_option("--threshold", attribute.threshold,
                            "score cut for the logistic label");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*cmd_synth) {
      synth.delta_given = delta_opt->count() > 0;
      synth.seed_given = synth_seed->count() > 0;
      run_synth(synth);
    } else if (*cmd_train) {
      train.alpha_given = alpha_opt->count() > 0;
      train.seed_given = train_seed->count() > 0;
      run_train(train);
    } else if (*cmd_eval) {
      run_eval(eval);
    } else if (*cmd_grid) {
      run_grid(grid);
    } else if (*cmd_compare) {
      compare.seed_given = compare_seed->count() > 0;
      run_compare(compare);
    } else if (*cmd_attribute) {
      run_attribute(attribute);
    }
  } catch (const CliError& e) {
    std::cerr << "error: " << e.message << "\n";
    return e.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
