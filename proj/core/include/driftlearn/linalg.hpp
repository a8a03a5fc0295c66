#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace driftlearn {

// Dense row-major matrix of 64-bit reals. Deliberately small: the matrices
// here are class prototypes, label factors, and activation samples, none of
// which exceed a few hundred rows or columns.
struct RealMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // rows * cols, row-major

  RealMatrix() = default;
  RealMatrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  bool empty() const { return rows == 0 || cols == 0; }

  static RealMatrix identity(std::size_t n);
};

// Thin SVD A = U diag(S) V^T with k = min(rows, cols) columns.
// Singular values are sorted descending; exact ties keep the working
// column order so repeated runs produce identical factors.
struct SvdResult {
  RealMatrix left_vectors;               // m x k
  std::vector<double> singular_values;   // length k, descending, >= 0
  RealMatrix right_vectors;              // n x k
};

// One-sided Jacobi SVD. Accurate and dependency-free for the small dense
// matrices used throughout; rejects non-finite input.
SvdResult svd(const RealMatrix& a);

// 1 - <a,b>/(|a||b|), clamped to [0, 2]. Throws if either norm <= 1e-12.
double cosine_distance(std::span<const double> a, std::span<const double> b);

// Smallest-k left singular basis capturing `energy` of the squared
// singular mass. An all-zero matrix yields a basis with zero columns.
RealMatrix energy_basis(const RealMatrix& a, double energy);

// B B^T v for a basis with orthonormal columns; an empty basis projects
// everything to zero.
std::vector<double> project(std::span<const double> v, const RealMatrix& basis);

// ---- small helpers shared across modules ----

RealMatrix transpose(const RealMatrix& a);
RealMatrix multiply(const RealMatrix& a, const RealMatrix& b);
std::vector<double> matvec(const RealMatrix& a, std::span<const double> x);

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> v);
double frobenius_norm(const RealMatrix& a);

// Throws std::invalid_argument naming `what` if any entry is not finite.
void check_finite(const RealMatrix& a, const std::string& what);
void check_finite(std::span<const double> v, const std::string& what);

}  // namespace driftlearn
