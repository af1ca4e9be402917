#include <cmath>

#include "gridflex/kernels.hpp"

// Parallel variants. Each loop distributes independent output rows/columns,
// never a floating-point reduction, so results match the serial reference
// bit for bit.

namespace gridflex::kernels::omp {

void matmul(const Matrix& a, const Matrix& b, Matrix& out) {
  const auto m = static_cast<long>(a.rows());
  const std::size_t k = a.cols(), n = b.cols();
#pragma omp parallel for schedule(static)
  for (long i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double sum = 0.0;
      for (std::size_t l = 0; l < k; ++l)
        sum += a(static_cast<std::size_t>(i), l) * b(l, j);
      out(static_cast<std::size_t>(i), j) = sum;
    }
  }
}

void matvec(const Matrix& a, std::span<const double> x,
            std::span<double> out) {
  const auto m = static_cast<long>(a.rows());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < m; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j)
      sum += a(static_cast<std::size_t>(i), j) * x[j];
    out[static_cast<std::size_t>(i)] = sum;
  }
}

LuFactors lu_factor(Matrix a, double pivot_floor) {
  const std::size_t n = a.rows();
  LuFactors f;
  f.perm.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    // pivot search stays serial: O(n) and order-sensitive
    std::size_t piv = k;
    double best = std::abs(a(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      const double cand = std::abs(a(i, k));
      if (cand > best) {
        best = cand;
        piv = i;
      }
    }
    if (best < pivot_floor)
      throw SingularMatrixError("singular matrix: pivot below threshold");
    f.perm[k] = static_cast<int>(piv);
    if (piv != k)
      for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
    const double inv_pivot = 1.0 / a(k, k);
    const auto lo = static_cast<long>(k + 1);
    const auto hi = static_cast<long>(n);
#pragma omp parallel for schedule(static) if (n - k > 64)
    for (long i = lo; i < hi; ++i) {
      const auto row = static_cast<std::size_t>(i);
      const double factor = a(row, k) * inv_pivot;
      a(row, k) = factor;
      for (std::size_t j = k + 1; j < n; ++j) a(row, j) -= factor * a(k, j);
    }
  }
  f.lu = std::move(a);
  return f;
}

Matrix lu_inverse(const LuFactors& f) {
  const auto n = static_cast<long>(f.lu.rows());
  Matrix inv(f.lu.rows(), f.lu.rows());
#pragma omp parallel for schedule(static)
  for (long j = 0; j < n; ++j) {
    std::vector<double> col(static_cast<std::size_t>(n), 0.0);
    col[static_cast<std::size_t>(j)] = 1.0;
    serial::lu_solve(f, col);
    for (long i = 0; i < n; ++i)
      inv(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) =
          col[static_cast<std::size_t>(i)];
  }
  return inv;
}

}  // namespace gridflex::kernels::omp
