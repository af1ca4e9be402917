#pragma once

#include <array>
#include <span>
#include <vector>

#include "gridflex/grid_model.hpp"
#include "gridflex/kernels.hpp"

namespace gridflex {

struct ConvergenceReport {
  int iterations = 0;
  double final_mismatch = 0.0;
  bool converged = false;
  std::vector<double> mismatch_history;  // max-norm per iteration
};

/// Converged operating point plus derived branch quantities. Terminal 0 is
/// the from end, terminal 1 the to end.
struct PowerFlowSolution {
  std::vector<double> v;      // p.u.
  std::vector<double> delta;  // rad, slack = 0
  std::vector<double> p, q;   // realized injections, p.u.
  std::vector<std::array<double, 2>> branch_p;
  std::vector<std::array<double, 2>> branch_q;
  std::vector<std::array<double, 2>> branch_i;  // current magnitudes
  ConvergenceReport report;
};

struct NewtonOptions {
  double tolerance = 1e-8;
  int max_iter = 20;
  bool flat_start = true;
};

/// Evaluate the polar power flow equations at (v, delta).
void compute_bus_injections(const AdmittanceMatrix& ybus,
                            std::span<const double> v,
                            std::span<const double> delta,
                            std::span<double> p_out, std::span<double> q_out);

/// Newton-Raphson on the non-slack (delta, v) unknowns. Mismatch ordering is
/// all dp rows then all dq rows. A non-convergent run returns the last
/// iterate with report.converged = false and no branch quantities; a pivot
/// failure inside an iteration throws SingularMatrixError.
PowerFlowSolution solve_newton_raphson(const GridCase& grid,
                                       const NewtonOptions& options = {});
PowerFlowSolution solve_newton_raphson(const GridCase& grid,
                                       const AdmittanceMatrix& ybus,
                                       const NewtonOptions& options = {});

/// Per-terminal (p, q) of every branch at the given state, pi-model.
void compute_branch_flows(const GridCase& grid, std::span<const double> v,
                          std::span<const double> delta,
                          std::vector<std::array<double, 2>>& branch_p,
                          std::vector<std::array<double, 2>>& branch_q);

/// Per-terminal current magnitudes |(V_i - V_j)/z + V_i y_sh/2|.
void compute_branch_currents(const GridCase& grid, std::span<const double> v,
                             std::span<const double> delta,
                             std::vector<std::array<double, 2>>& branch_i);

/// Scheduled injections (zero at the slack, which absorbs the residual).
std::vector<double> scheduled_p(const GridCase& grid);
std::vector<double> scheduled_q(const GridCase& grid);

}  // namespace gridflex
