#include "numerics.hpp"

#include <cmath>
#include <numbers>

namespace rdr {

void require_finite(const Matrix& m, const std::string& what) {
  for (std::size_t i = 0; i < m.n_rows; ++i) {
    for (std::size_t j = 0; j < m.n_cols; ++j) {
      if (!std::isfinite(m.at(i, j))) {
        throw DomainError(what + ": non-finite value at row " + std::to_string(i) +
                          ", column " + std::to_string(j));
      }
    }
  }
}

std::uint64_t RngState::next_u64() {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double RngState::next_uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngState::next_normal() {
  // First uniform shifted into (0, 1] so the log never sees zero.
  const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

RngState RngState::derive(std::uint64_t stream) const {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return RngState(z ^ (z >> 31));
}

std::vector<double> uniforms(RngState& rng, std::size_t n) {
  std::vector<double> out(n);
  for (auto& v : out) v = rng.next_uniform();
  return out;
}

std::vector<double> normals(RngState& rng, std::size_t n) {
  std::vector<double> out(n);
  for (auto& v : out) v = rng.next_normal();
  return out;
}

Matrix affine(const Matrix& x, const Matrix& w, const std::vector<double>& b) {
  if (w.n_cols != x.n_cols) {
    throw ShapeError("affine: weight is " + std::to_string(w.n_rows) + "x" +
                     std::to_string(w.n_cols) + " but input has " +
                     std::to_string(x.n_cols) + " columns");
  }
  if (b.size() != w.n_rows) {
    throw ShapeError("affine: bias has " + std::to_string(b.size()) +
                     " entries but weight has " + std::to_string(w.n_rows) + " rows");
  }
  Matrix out(x.n_rows, w.n_rows);
  for (std::size_t i = 0; i < x.n_rows; ++i) {
    for (std::size_t r = 0; r < w.n_rows; ++r) {
      double acc = 0.0;
      for (std::size_t j = 0; j < x.n_cols; ++j) acc += w.at(r, j) * x.at(i, j);
      out.at(i, r) = acc + b[r];
    }
  }
  return out;
}

std::vector<double> solve_square(Matrix a, std::vector<double> b) {
  const std::size_t n = a.n_rows;
  if (a.n_cols != n) {
    throw ShapeError("solve_square: matrix is " + std::to_string(a.n_rows) + "x" +
                     std::to_string(a.n_cols) + ", expected square");
  }
  if (b.size() != n) {
    throw ShapeError("solve_square: rhs has " + std::to_string(b.size()) +
                     " entries for a " + std::to_string(n) + "-row system");
  }
  constexpr double pivot_tol = 1e-12;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t best = k;
    for (std::size_t i = k + 1; i < n; ++i) {
      if (std::fabs(a.at(i, k)) > std::fabs(a.at(best, k))) best = i;
    }
    if (std::fabs(a.at(best, k)) < pivot_tol) {
      throw SingularError("solve_square: no usable pivot in column " + std::to_string(k), k);
    }
    if (best != k) {
      for (std::size_t j = k; j < n; ++j) std::swap(a.at(k, j), a.at(best, j));
      std::swap(b[k], b[best]);
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = a.at(i, k) / a.at(k, k);
      if (f == 0.0) continue;
      for (std::size_t j = k; j < n; ++j) a.at(i, j) -= f * a.at(k, j);
      b[i] -= f * b[k];
    }
  }
  std::vector<double> z(n, 0.0);
  for (std::size_t ir = n; ir-- > 0;) {
    double acc = b[ir];
    for (std::size_t j = ir + 1; j < n; ++j) acc -= a.at(ir, j) * z[j];
    z[ir] = acc / a.at(ir, ir);
  }
  return z;
}

double stable_softplus(double z) {
  return std::fmax(z, 0.0) + std::log1p(std::exp(-std::fabs(z)));
}

}  // namespace rdr
