#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "gridflex/matrix.hpp"

namespace gridflex {

struct SingularMatrixError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Kernel dispatch: OpenMP-parallel implementations with a serial reference
/// kept for testing. Both produce bit-identical results; the parallel loops
/// only distribute independent output slots.
enum class ExecPolicy { Serial, Parallel };

namespace kernels {

ExecPolicy default_policy();
void set_default_policy(ExecPolicy policy);

struct LuFactors {
  Matrix lu;              // combined L (unit diagonal) and U
  std::vector<int> perm;  // row permutation
};

namespace serial {
void matmul(const Matrix& a, const Matrix& b, Matrix& out);
void matvec(const Matrix& a, std::span<const double> x, std::span<double> out);
LuFactors lu_factor(Matrix a, double pivot_floor);
void lu_solve(const LuFactors& f, std::span<double> rhs);
Matrix lu_inverse(const LuFactors& f);
}  // namespace serial

namespace omp {
void matmul(const Matrix& a, const Matrix& b, Matrix& out);
void matvec(const Matrix& a, std::span<const double> x, std::span<double> out);
LuFactors lu_factor(Matrix a, double pivot_floor);
Matrix lu_inverse(const LuFactors& f);
}  // namespace omp

/// out = a * b; dimension mismatch throws std::invalid_argument.
Matrix matmul(const Matrix& a, const Matrix& b,
              ExecPolicy policy = default_policy());
void matvec(const Matrix& a, std::span<const double> x, std::span<double> out,
            ExecPolicy policy = default_policy());

/// LU with partial pivoting; a pivot magnitude below pivot_floor throws
/// SingularMatrixError.
LuFactors lu_factor(Matrix a, double pivot_floor = 1e-12,
                    ExecPolicy policy = default_policy());
void lu_solve(const LuFactors& f, std::span<double> rhs);
Matrix lu_inverse(const LuFactors& f, ExecPolicy policy = default_policy());

double norm_1(const Matrix& a);

/// Exact 1-norm condition number from an explicit inverse.
double condition_1(const Matrix& a, const Matrix& a_inv);

}  // namespace kernels
}  // namespace gridflex
