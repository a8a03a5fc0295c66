#include "driftlearn/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace driftlearn {

RealMatrix RealMatrix::identity(std::size_t n) {
  RealMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void check_finite(const RealMatrix& a, const std::string& what) {
  for (const double v : a.data) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument(what + ": non-finite entry");
    }
  }
}

void check_finite(std::span<const double> v, const std::string& what) {
  for (const double x : v) {
    if (!std::isfinite(x)) {
      throw std::invalid_argument(what + ": non-finite entry");
    }
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("dot: length mismatch");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double frobenius_norm(const RealMatrix& a) {
  double s = 0.0;
  for (const double v : a.data) s += v * v;
  return std::sqrt(s);
}

RealMatrix transpose(const RealMatrix& a) {
  RealMatrix t(a.cols, a.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
  }
  return t;
}

RealMatrix multiply(const RealMatrix& a, const RealMatrix& b) {
  if (a.cols != b.rows) {
    throw std::invalid_argument("multiply: inner dimension mismatch");
  }
  RealMatrix c(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols; ++j) c(i, j) += aik * b(k, j);
    }
  }
  return c;
}

std::vector<double> matvec(const RealMatrix& a, std::span<const double> x) {
  if (a.cols != x.size()) {
    throw std::invalid_argument("matvec: dimension mismatch");
  }
  std::vector<double> y(a.rows, 0.0);
  for (std::size_t i = 0; i < a.rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols; ++j) s += a(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

namespace {

// Core one-sided Jacobi on a tall matrix (m >= n). Rotates column pairs of
// the working copy until all pairs are numerically orthogonal, accumulating
// rotations in V. Column norms become singular values.
struct JacobiFactors {
  RealMatrix u;                   // m x n, columns scaled to unit norm where sigma > 0
  std::vector<double> sigma;      // n
  RealMatrix v;                   // n x n
};

JacobiFactors jacobi_tall(const RealMatrix& a) {
  const std::size_t m = a.rows;
  const std::size_t n = a.cols;
  RealMatrix work = a;
  RealMatrix v = RealMatrix::identity(n);

  constexpr double kOrthTol = 1e-14;
  constexpr int kMaxSweeps = 60;

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool converged = true;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double app = 0.0, aqq = 0.0, apq = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          const double xp = work(i, p);
          const double xq = work(i, q);
          app += xp * xp;
          aqq += xq * xq;
          apq += xp * xq;
        }
        if (std::fabs(apq) <= kOrthTol * std::sqrt(app) * std::sqrt(aqq)) continue;

        converged = false;
        const double tau = (aqq - app) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;

        for (std::size_t i = 0; i < m; ++i) {
          const double xp = work(i, p);
          const double xq = work(i, q);
          work(i, p) = c * xp - s * xq;
          work(i, q) = s * xp + c * xq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vp = v(i, p);
          const double vq = v(i, q);
          v(i, p) = c * vp - s * vq;
          v(i, q) = s * vp + c * vq;
        }
      }
    }
    if (converged) break;
  }

  JacobiFactors f;
  f.sigma.assign(n, 0.0);
  f.u = RealMatrix(m, n);
  f.v = std::move(v);
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += work(i, j) * work(i, j);
    f.sigma[j] = std::sqrt(s);
    if (f.sigma[j] > 0.0) {
      const double inv = 1.0 / f.sigma[j];
      for (std::size_t i = 0; i < m; ++i) f.u(i, j) = work(i, j) * inv;
    }
  }
  return f;
}

// Replaces columns whose singular value is negligible with a deterministic
// orthonormal completion so the left factor always has orthonormal columns.
void complete_orthonormal(RealMatrix& u, const std::vector<double>& sigma,
                          double sigma_max) {
  const std::size_t m = u.rows;
  const std::size_t k = u.cols;
  const double cutoff = sigma_max * 1e-12;
  for (std::size_t j = 0; j < k; ++j) {
    if (sigma[j] > cutoff) continue;
    bool placed = false;
    for (std::size_t cand = 0; cand < m && !placed; ++cand) {
      std::vector<double> w(m, 0.0);
      w[cand] = 1.0;
      for (std::size_t c = 0; c < k; ++c) {
        if (c == j) continue;
        if (sigma[c] <= cutoff && c > j) continue;  // not yet filled
        double proj = 0.0;
        for (std::size_t i = 0; i < m; ++i) proj += u(i, c) * w[i];
        for (std::size_t i = 0; i < m; ++i) w[i] -= proj * u(i, c);
      }
      const double wn = norm(w);
      if (wn > 0.5) {
        for (std::size_t i = 0; i < m; ++i) u(i, j) = w[i] / wn;
        placed = true;
      }
    }
    if (!placed) {
      throw std::runtime_error("svd: failed to complete orthonormal basis");
    }
  }
}

RealMatrix select_columns(const RealMatrix& a, std::span<const std::size_t> idx) {
  RealMatrix out(a.rows, idx.size());
  for (std::size_t j = 0; j < idx.size(); ++j) {
    for (std::size_t i = 0; i < a.rows; ++i) out(i, j) = a(i, idx[j]);
  }
  return out;
}

}  // namespace

SvdResult svd(const RealMatrix& a) {
  if (a.empty()) throw std::invalid_argument("svd: empty matrix");
  check_finite(a, "svd input");

  const bool transposed = a.rows < a.cols;
  JacobiFactors f = transposed ? jacobi_tall(transpose(a)) : jacobi_tall(a);

  const std::size_t k = f.sigma.size();  // = min(rows, cols)

  // Descending stable order: equal singular values keep column order.
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return f.sigma[i] > f.sigma[j];
  });

  SvdResult r;
  r.singular_values.resize(k);
  for (std::size_t j = 0; j < k; ++j) r.singular_values[j] = f.sigma[order[j]];

  RealMatrix u = select_columns(f.u, order);
  RealMatrix v = select_columns(f.v, order);

  std::vector<double> sorted_sigma = r.singular_values;
  const double sigma_max = sorted_sigma.empty() ? 0.0 : sorted_sigma.front();
  complete_orthonormal(u, sorted_sigma, sigma_max);

  if (transposed) {
    r.left_vectors = std::move(v);
    r.right_vectors = std::move(u);
  } else {
    r.left_vectors = std::move(u);
    r.right_vectors = std::move(v);
  }
  return r;
}

double cosine_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("cosine_distance: length mismatch");
  }
  const double na = norm(a);
  const double nb = norm(b);
  if (na <= 1e-12 || nb <= 1e-12) {
    throw std::invalid_argument("cosine_distance: degenerate (near-zero) vector");
  }
  const double d = 1.0 - dot(a, b) / (na * nb);
  return std::clamp(d, 0.0, 2.0);
}

RealMatrix energy_basis(const RealMatrix& a, double energy) {
  if (energy <= 0.0 || energy > 1.0) {
    throw std::invalid_argument("energy_basis: energy must lie in (0, 1]");
  }
  check_finite(a, "energy_basis input");

  const SvdResult f = svd(a);
  const auto& sigma = f.singular_values;

  double total = 0.0;
  for (const double s : sigma) total += s * s;
  if (total == 0.0) return RealMatrix(a.rows, 0);

  const double cutoff = sigma.front() * 1e-12;
  std::size_t rank = 0;
  while (rank < sigma.size() && sigma[rank] > cutoff) ++rank;

  std::size_t k = rank;
  double cum = 0.0;
  for (std::size_t i = 0; i < rank; ++i) {
    cum += sigma[i] * sigma[i];
    if (cum >= energy * total) {
      k = i + 1;
      break;
    }
  }

  RealMatrix basis(a.rows, k);
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t i = 0; i < a.rows; ++i) basis(i, j) = f.left_vectors(i, j);
  }
  return basis;
}

std::vector<double> project(std::span<const double> v, const RealMatrix& basis) {
  if (basis.rows != v.size()) {
    throw std::invalid_argument("project: vector length does not match basis rows");
  }
  std::vector<double> out(v.size(), 0.0);
  for (std::size_t j = 0; j < basis.cols; ++j) {
    double coeff = 0.0;
    for (std::size_t i = 0; i < basis.rows; ++i) coeff += basis(i, j) * v[i];
    for (std::size_t i = 0; i < basis.rows; ++i) out[i] += coeff * basis(i, j);
  }
  return out;
}

}  // namespace driftlearn
