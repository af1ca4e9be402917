// Serial reference vs OpenMP kernels on the dense sizes this project
// actually produces (sensitivity transforms and Jacobian inversions), plus
// a few larger sizes to show scaling.

#include <benchmark/benchmark.h>

#include <random>

#include "gridflex/kernels.hpp"

using gridflex::ExecPolicy;
using gridflex::Matrix;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = dist(rng);
  return m;
}

Matrix diagonally_dominant(std::size_t n, unsigned seed) {
  Matrix m = random_matrix(n, n, seed);
  for (std::size_t i = 0; i < n; ++i) m(i, i) += static_cast<double>(n);
  return m;
}

void bm_matmul(benchmark::State& state, ExecPolicy policy) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_matrix(2 * n, 2 * n, 1);
  const Matrix b = random_matrix(2 * n, 2 * n, 2);
  for (auto _ : state) {
    Matrix c = gridflex::kernels::matmul(a, b, policy);
    benchmark::DoNotOptimize(c.data());
  }
}

void bm_lu_inverse(benchmark::State& state, ExecPolicy policy) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = diagonally_dominant(n, 3);
  for (auto _ : state) {
    auto factors = gridflex::kernels::lu_factor(a, 1e-12, policy);
    Matrix inv = gridflex::kernels::lu_inverse(factors, policy);
    benchmark::DoNotOptimize(inv.data());
  }
}

}  // namespace

BENCHMARK_CAPTURE(bm_matmul, serial, ExecPolicy::Serial)
    ->Arg(34)->Arg(128)->Arg(256);
BENCHMARK_CAPTURE(bm_matmul, openmp, ExecPolicy::Parallel)
    ->Arg(34)->Arg(128)->Arg(256);
BENCHMARK_CAPTURE(bm_lu_inverse, serial, ExecPolicy::Serial)
    ->Arg(66)->Arg(128)->Arg(256);
BENCHMARK_CAPTURE(bm_lu_inverse, openmp, ExecPolicy::Parallel)
    ->Arg(66)->Arg(128)->Arg(256);

BENCHMARK_MAIN();
