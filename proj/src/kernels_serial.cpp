#include <atomic>
#include <cmath>
#include <cstdlib>

#include "gridflex/kernels.hpp"

namespace gridflex::kernels {

namespace {
std::atomic<ExecPolicy> g_policy{ExecPolicy::Parallel};
}

ExecPolicy default_policy() { return g_policy.load(); }
void set_default_policy(ExecPolicy policy) { g_policy.store(policy); }

namespace serial {

void matmul(const Matrix& a, const Matrix& b, Matrix& out) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double sum = 0.0;
      for (std::size_t l = 0; l < k; ++l) sum += a(i, l) * b(l, j);
      out(i, j) = sum;
    }
  }
}

void matvec(const Matrix& a, std::span<const double> x,
            std::span<double> out) {
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) sum += a(i, j) * x[j];
    out[i] = sum;
  }
}

LuFactors lu_factor(Matrix a, double pivot_floor) {
  const std::size_t n = a.rows();
  LuFactors f;
  f.perm.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
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
    for (std::size_t i = k + 1; i < n; ++i) {
      const double factor = a(i, k) * inv_pivot;
      a(i, k) = factor;
      for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= factor * a(k, j);
    }
  }
  f.lu = std::move(a);
  return f;
}

void lu_solve(const LuFactors& f, std::span<double> rhs) {
  const std::size_t n = f.lu.rows();
  for (std::size_t k = 0; k < n; ++k) {
    const auto piv = static_cast<std::size_t>(f.perm[k]);
    if (piv != k) std::swap(rhs[k], rhs[piv]);
    for (std::size_t i = k + 1; i < n; ++i) rhs[i] -= f.lu(i, k) * rhs[k];
  }
  for (std::size_t k = n; k-- > 0;) {
    double sum = rhs[k];
    for (std::size_t j = k + 1; j < n; ++j) sum -= f.lu(k, j) * rhs[j];
    rhs[k] = sum / f.lu(k, k);
  }
}

Matrix lu_inverse(const LuFactors& f) {
  const std::size_t n = f.lu.rows();
  Matrix inv(n, n);
  std::vector<double> col(n);
  for (std::size_t j = 0; j < n; ++j) {
    std::fill(col.begin(), col.end(), 0.0);
    col[j] = 1.0;
    serial::lu_solve(f, col);
    for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
  }
  return inv;
}

}  // namespace serial

Matrix matmul(const Matrix& a, const Matrix& b, ExecPolicy policy) {
  if (a.cols() != b.rows())
    throw std::invalid_argument("matmul: dimension mismatch");
  Matrix out(a.rows(), b.cols());
  if (policy == ExecPolicy::Parallel)
    omp::matmul(a, b, out);
  else
    serial::matmul(a, b, out);
  return out;
}

void matvec(const Matrix& a, std::span<const double> x, std::span<double> out,
            ExecPolicy policy) {
  if (a.cols() != x.size() || a.rows() != out.size())
    throw std::invalid_argument("matvec: dimension mismatch");
  if (policy == ExecPolicy::Parallel)
    omp::matvec(a, x, out);
  else
    serial::matvec(a, x, out);
}

LuFactors lu_factor(Matrix a, double pivot_floor, ExecPolicy policy) {
  if (a.rows() != a.cols())
    throw std::invalid_argument("lu_factor: matrix not square");
  return policy == ExecPolicy::Parallel ? omp::lu_factor(std::move(a), pivot_floor)
                                        : serial::lu_factor(std::move(a), pivot_floor);
}

void lu_solve(const LuFactors& f, std::span<double> rhs) {
  serial::lu_solve(f, rhs);
}

Matrix lu_inverse(const LuFactors& f, ExecPolicy policy) {
  return policy == ExecPolicy::Parallel ? omp::lu_inverse(f)
                                        : serial::lu_inverse(f);
}

double norm_1(const Matrix& a) {
  double best = 0.0;
  for (std::size_t j = 0; j < a.cols(); ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) sum += std::abs(a(i, j));
    best = std::max(best, sum);
  }
  return best;
}

double condition_1(const Matrix& a, const Matrix& a_inv) {
  return norm_1(a) * norm_1(a_inv);
}

}  // namespace gridflex::kernels
