#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gridflex/grid_model.hpp"
#include "gridflex/lp.hpp"
#include "gridflex/powerflow.hpp"

namespace gridflex {

/// PTDF-vs-power-flow comparison for one branch's reactive flow under
/// injections at one bus. deviations holds
/// (q_predicted - q_true) / q_true per magnitude, NaN where the power flow
/// diverged or |q_true| dipped below q_floor.
struct DeviationSweep {
  int branch_index = 0;
  int injection_bus = 0;
  char injection_type = 'q';  // 'p' or 'q'
  double q_floor = 1e-4;
  double base_flow = 0.0;  // from-terminal q_ij at the linearization point
  std::vector<double> magnitudes;
  std::vector<double> q_predicted, q_true, deviations;
  std::vector<std::uint8_t> point_converged;
};

/// Zero plus 19 log-spaced magnitudes in [1e-3, 0.1] p.u.
std::vector<double> default_sweep_magnitudes();

struct SweepOptions {
  NewtonOptions newton{.tolerance = 1e-10, .max_iter = 30, .flat_start = true};
  double q_floor = 1e-4;
};

/// Sweep points are independent and run in parallel; assembly stays ordered
/// by magnitude. Throws ValidationError when the base flow magnitude is at
/// or below q_floor.
DeviationSweep ptdf_deviation_sweep(const GridCase& grid, int branch_index,
                                    int injection_bus, char injection_type,
                                    std::span<const double> magnitudes,
                                    const SweepOptions& options = {});

/// Max relative error between the analytic Jacobian and central finite
/// differences of the injection equations at the converged operating point.
/// h outside [1e-8, 1e-4] is rejected (round-off regime).
double jacobian_fd_check(const GridCase& grid, double h);

struct AuditViolation {
  std::string row;  // row label or bound identity
  double residual = 0.0;
};

/// Recompute every constraint row and bound for an optimal solution;
/// anything beyond tol is reported.
std::vector<AuditViolation> lp_constraint_audit(const LinearProgram& lp,
                                                const LpSolution& solution,
                                                double tol = 1e-9);

}  // namespace gridflex
