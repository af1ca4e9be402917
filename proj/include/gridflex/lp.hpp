#pragma once

#include <limits>
#include <string>
#include <vector>

#include "gridflex/matrix.hpp"
#include "gridflex/sensitivity.hpp"

namespace gridflex {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class LpStatus { Optimal, Infeasible, Unbounded, NumericalFailure };

const char* to_string(LpStatus status);

/// min cost^T x  s.t.  a_ineq x <= b_ineq,  a_eq x = b_eq,  lower <= x <= upper.
struct LinearProgram {
  std::vector<double> cost;
  Matrix a_ineq;
  std::vector<double> b_ineq;
  Matrix a_eq;
  std::vector<double> b_eq;
  std::vector<double> lower, upper;  // +-kInf allowed

  std::vector<std::string> ineq_labels, eq_labels;

  // layout metadata for the flexibility LP: x = [dp dq ddelta dv slack]
  std::size_t bus_count = 0;
  std::size_t ic_count = 0;

  std::size_t columns() const { return cost.size(); }
  std::size_t var_dp(std::size_t bus) const { return bus; }
  std::size_t var_dq(std::size_t bus) const { return bus_count + bus; }
  std::size_t var_ddelta(std::size_t bus) const { return 2 * bus_count + bus; }
  std::size_t var_dv(std::size_t bus) const { return 3 * bus_count + bus; }
  std::size_t var_slack_p(std::size_t ic) const { return 4 * bus_count + ic; }
  std::size_t var_slack_q(std::size_t ic) const {
    return 4 * bus_count + ic_count + ic;
  }
};

struct LpSolution {
  LpStatus status = LpStatus::NumericalFailure;
  std::vector<double> x;
  double objective = 0.0;
  int iterations = 0;
  std::string message;
};

struct SimplexOptions {
  double tolerance = 1e-9;
  int max_iterations = 50000;
  int refactor_interval = 64;
};

/// Bounded-variable two-phase primal simplex. Deterministic pivoting:
/// Dantzig pricing with lowest-index ties, falling back to Bland's rule
/// after a degeneracy streak.
LpSolution solve_lp(const LinearProgram& lp, const SimplexOptions& options = {});

/// Objective weights steering the interconnection power flow slacks.
/// dp costs are oriented along the per-bus sampling direction, so the
/// default negative weight rewards progress into the sampled range.
struct ObjectiveWeights {
  std::size_t priority_interconnection = 0;
  double priority_q = -1.0;
  double other_q = 0.1;
  double dp = -1.0;
};

/// Per-bus deviation bounds for one sample; zero everywhere except
/// flexibility buses.
struct SampleBounds {
  std::vector<double> dp_lower, dp_upper;
  std::vector<double> dq_lower, dq_upper;
};

/// Assemble the flexibility LP at the bundle's operating point:
/// voltage/angle box inequalities through the inverse Jacobian, one-sided
/// relative current rows, state-coupling equalities, interconnection slack
/// equalities and the reactive-power threshold row.
LinearProgram assemble_for_lp(const SensitivityBundle& bundle,
                              const GridCase& grid,
                              const SampleBounds& sample_bounds,
                              const ObjectiveWeights& weights,
                              double q_thresh);

/// Documented CSV triple (<prefix>_cost.csv, <prefix>_ineq.csv,
/// <prefix>_eq.csv) for external cross-checking.
void write_lp_debug(const LinearProgram& lp, const std::string& prefix);

}  // namespace gridflex
