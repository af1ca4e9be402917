#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gridflex/grid_model.hpp"
#include "gridflex/matrix.hpp"
#include "gridflex/powerflow.hpp"

namespace gridflex {

struct IllConditionedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// All first-order sensitivities linearized at one converged operating point.
///
/// Orderings, used consistently everywhere downstream:
///  - full state columns/rows: [delta_0..delta_{n-1}, v_0..v_{n-1}]
///  - full injection columns:  [p_0..p_{n-1}, q_0..q_{n-1}]
///  - branch power rows: all p rows (from-terminal) then all q rows, 2b total
///  - current rows: from-terminal rows 0..b-1, to-terminal rows b..2b-1
struct SensitivityBundle {
  Matrix jacobian;    // 2(n-1) x 2(n-1), non-slack subspace
  Matrix j_inv_full;  // 2n x 2n, slack rows/columns zero
  Matrix pq_t_dv;     // 2b x 2n
  Matrix pq_t_pq;     // 2b x 2n
  Matrix pq_t_p;      // 2b x n
  Matrix pq_t_q;      // 2b x n
  Matrix id_tb;       // 2b x n, rows scaled by 1/i_0 (relative deviation)
  Matrix iu_tb;       // 2b x n
  std::vector<double> current_base;      // i_0 per current row
  std::vector<std::uint8_t> current_ok;  // i_0 > i_floor; excluded rows are 0
  PowerFlowSolution operating_point;
};

struct SensitivityOptions {
  double condition_limit = 1e12;
  double i_floor = 1e-6;  // p.u.; rows at or below are flagged out
};

/// Analytic NR Jacobian d(p,q)/d(delta,v) over non-slack buses.
Matrix build_jacobian(const GridCase& grid, const AdmittanceMatrix& ybus,
                      std::span<const double> v, std::span<const double> delta);
Matrix build_jacobian(const GridCase& grid, const AdmittanceMatrix& ybus,
                      const PowerFlowSolution& solution);

/// Inverse on the non-slack subspace, zero-padded to 2n x 2n. Throws
/// SingularMatrixError on a pivot failure and IllConditionedError when the
/// 1-norm condition number exceeds condition_limit.
Matrix invert_jacobian(const Matrix& jacobian, std::size_t bus_count,
                       int slack_bus, double condition_limit = 1e12);

/// Analytic partials of the from-terminal branch flow equations, scattered
/// into bus-indexed columns. 2b x 2n.
Matrix branch_terminal_sensitivities(const GridCase& grid,
                                     const PowerFlowSolution& solution);

/// pq_t_pq = pq_t_dv * j_inv_full, split by injection type.
void transform_to_injection_ptdf(const Matrix& pq_t_dv,
                                 const Matrix& j_inv_full, Matrix& pq_t_pq,
                                 Matrix& pq_t_p, Matrix& pq_t_q);

/// Relative current deviation sensitivities d(di/i0)/d(delta, v) per
/// terminal, mapped to bus columns. Rows with i_0 <= i_floor are zeroed and
/// flagged in current_ok.
void current_sensitivities(const GridCase& grid,
                           const PowerFlowSolution& solution, double i_floor,
                           Matrix& id_tb, Matrix& iu_tb,
                           std::vector<double>& current_base,
                           std::vector<std::uint8_t>& current_ok);

/// Assemble the full bundle at a converged solution.
SensitivityBundle build_sensitivity_bundle(const GridCase& grid,
                                           const AdmittanceMatrix& ybus,
                                           const PowerFlowSolution& solution,
                                           const SensitivityOptions& options = {});

}  // namespace gridflex
