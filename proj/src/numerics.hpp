#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"

namespace rdr {

// Dense row-major matrix of doubles. Column names are optional; when present
// there is exactly one per column.
struct Matrix {
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::vector<double> data;
  std::vector<std::string> column_names;

  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : n_rows(rows), n_cols(cols), data(rows * cols, fill) {}

  double& at(std::size_t i, std::size_t j) { return data[i * n_cols + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * n_cols + j]; }

  std::span<const double> row(std::size_t i) const {
    return {data.data() + i * n_cols, n_cols};
  }
  std::span<double> row(std::size_t i) {
    return {data.data() + i * n_cols, n_cols};
  }
};

// Throws DomainError naming the first non-finite entry, if any.
void require_finite(const Matrix& m, const std::string& what);

// Deterministic splitmix64 stream. The full generator state is the seed plus
// the evolving 64-bit word, so sequences are reproducible across platforms.
struct RngState {
  std::uint64_t seed = 0;
  std::uint64_t state = 0;

  explicit RngState(std::uint64_t s) : seed(s), state(s) {}

  std::uint64_t next_u64();

  // Uniform on [0, 1), 53-bit mantissa.
  double next_uniform();

  // Standard normal via Box-Muller; consumes exactly two uniforms per draw.
  double next_normal();

  // Independent child stream; deterministic in (seed, stream).
  RngState derive(std::uint64_t stream) const;
};

std::vector<double> uniforms(RngState& rng, std::size_t n);
std::vector<double> normals(RngState& rng, std::size_t n);

// out[i] = w * x[i] + b for every row of x; w is (units x dims), b has one
// entry per unit. Accumulation runs over columns in index order so results
// are bit-identical across runs.
Matrix affine(const Matrix& x, const Matrix& w, const std::vector<double>& b);

// Gaussian elimination with partial pivoting. Throws SingularError when the
// best pivot magnitude falls below 1e-12.
std::vector<double> solve_square(Matrix a, std::vector<double> b);

// log(1 + e^z) computed as max(z, 0) + log1p(e^-|z|); safe for |z| <= 1e4.
double stable_softplus(double z);

}  // namespace rdr
