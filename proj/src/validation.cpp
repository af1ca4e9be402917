#include "gridflex/validation.hpp"

#include <cmath>
#include <limits>

#include "gridflex/sensitivity.hpp"

namespace gridflex {

std::vector<double> default_sweep_magnitudes() {
  std::vector<double> grid{0.0};
  const double lo = std::log10(1e-3), hi = std::log10(0.1);
  const int count = 19;
  for (int i = 0; i < count; ++i)
    grid.push_back(std::pow(10.0, lo + (hi - lo) * i / (count - 1)));
  return grid;
}

DeviationSweep ptdf_deviation_sweep(const GridCase& grid, int branch_index,
                                    int injection_bus, char injection_type,
                                    std::span<const double> magnitudes,
                                    const SweepOptions& options) {
  if (branch_index < 0 ||
      branch_index >= static_cast<int>(grid.branch_count()))
    throw std::invalid_argument("ptdf_deviation_sweep: branch index");
  if (injection_bus < 0 || injection_bus >= static_cast<int>(grid.bus_count()))
    throw std::invalid_argument("ptdf_deviation_sweep: bus index");
  if (injection_type != 'p' && injection_type != 'q')
    throw std::invalid_argument("ptdf_deviation_sweep: type must be p or q");

  const AdmittanceMatrix ybus = build_admittance(grid);
  const PowerFlowSolution base = solve_newton_raphson(grid, ybus, options.newton);
  if (!base.report.converged)
    throw std::runtime_error("ptdf_deviation_sweep: base case did not converge");
  const SensitivityBundle bundle = build_sensitivity_bundle(grid, ybus, base);

  const auto kb = static_cast<std::size_t>(branch_index);
  const std::size_t b = grid.branch_count();
  const double q_base = base.branch_q[kb][0];
  if (std::abs(q_base) <= options.q_floor)
    throw ValidationError({"branch " + std::to_string(branch_index) +
                           ": base reactive flow " + std::to_string(q_base) +
                           " p.u. is below the q_floor guard"});

  const auto d = static_cast<std::size_t>(injection_bus);
  const double slope = injection_type == 'p' ? bundle.pq_t_p(b + kb, d)
                                             : bundle.pq_t_q(b + kb, d);

  DeviationSweep sweep;
  sweep.branch_index = branch_index;
  sweep.injection_bus = injection_bus;
  sweep.injection_type = injection_type;
  sweep.q_floor = options.q_floor;
  sweep.base_flow = q_base;
  sweep.magnitudes.assign(magnitudes.begin(), magnitudes.end());
  const std::size_t count = sweep.magnitudes.size();
  sweep.q_predicted.assign(count, 0.0);
  sweep.q_true.assign(count, 0.0);
  sweep.deviations.assign(count, 0.0);
  sweep.point_converged.assign(count, 0);

  const double nan = std::numeric_limits<double>::quiet_NaN();
#pragma omp parallel for schedule(dynamic)
  for (long idx = 0; idx < static_cast<long>(count); ++idx) {
    const auto i = static_cast<std::size_t>(idx);
    const double eps = sweep.magnitudes[i];
    sweep.q_predicted[i] = q_base + slope * eps;
    if (eps == 0.0) {
      sweep.q_true[i] = q_base;
      sweep.deviations[i] = 0.0;
      sweep.point_converged[i] = 1;
      continue;
    }
    GridCase perturbed = grid;
    if (injection_type == 'p')
      perturbed.buses[d].p_inj += eps;
    else
      perturbed.buses[d].q_inj += eps;
    const PowerFlowSolution sol = solve_newton_raphson(perturbed, options.newton);
    if (!sol.report.converged) {
      sweep.q_true[i] = nan;
      sweep.deviations[i] = nan;
      continue;
    }
    sweep.point_converged[i] = 1;
    sweep.q_true[i] = sol.branch_q[kb][0];
    sweep.deviations[i] =
        std::abs(sweep.q_true[i]) > options.q_floor
            ? (sweep.q_predicted[i] - sweep.q_true[i]) / sweep.q_true[i]
            : nan;
  }
  return sweep;
}

double jacobian_fd_check(const GridCase& grid, double h) {
  if (!(h >= 1e-8 && h <= 1e-4))
    throw std::invalid_argument(
        "jacobian_fd_check: h outside [1e-8, 1e-4] (round-off regime)");

  const AdmittanceMatrix ybus = build_admittance(grid);
  const PowerFlowSolution sol = solve_newton_raphson(grid, ybus);
  if (!sol.report.converged)
    throw std::runtime_error("jacobian_fd_check: case did not converge");

  const Matrix analytic = build_jacobian(grid, ybus, sol);
  const std::size_t n = grid.bus_count();
  std::vector<std::size_t> reduced;
  for (std::size_t i = 0; i < n; ++i)
    if (static_cast<int>(i) != grid.slack_bus) reduced.push_back(i);
  const std::size_t r = reduced.size();

  std::vector<double> col_error(2 * r, 0.0);
#pragma omp parallel for schedule(static)
  for (long cc = 0; cc < static_cast<long>(2 * r); ++cc) {
    const auto c = static_cast<std::size_t>(cc);
    std::vector<double> v_hi(sol.v), v_lo(sol.v);
    std::vector<double> d_hi(sol.delta), d_lo(sol.delta);
    if (c < r) {
      d_hi[reduced[c]] += h;
      d_lo[reduced[c]] -= h;
    } else {
      v_hi[reduced[c - r]] += h;
      v_lo[reduced[c - r]] -= h;
    }
    std::vector<double> p_hi(n), q_hi(n), p_lo(n), q_lo(n);
    compute_bus_injections(ybus, v_hi, d_hi, p_hi, q_hi);
    compute_bus_injections(ybus, v_lo, d_lo, p_lo, q_lo);
    double worst = 0.0;
    for (std::size_t a = 0; a < r; ++a) {
      const std::size_t bus = reduced[a];
      const double fd_p = (p_hi[bus] - p_lo[bus]) / (2.0 * h);
      const double fd_q = (q_hi[bus] - q_lo[bus]) / (2.0 * h);
      const double err_p = std::abs(analytic(a, c) - fd_p) /
                           std::max(std::abs(analytic(a, c)), 1.0);
      const double err_q = std::abs(analytic(r + a, c) - fd_q) /
                           std::max(std::abs(analytic(r + a, c)), 1.0);
      worst = std::max({worst, err_p, err_q});
    }
    col_error[c] = worst;
  }
  double max_err = 0.0;
  for (double e : col_error) max_err = std::max(max_err, e);
  return max_err;
}

std::vector<AuditViolation> lp_constraint_audit(const LinearProgram& lp,
                                                const LpSolution& solution,
                                                double tol) {
  if (solution.status != LpStatus::Optimal)
    throw std::invalid_argument("lp_constraint_audit: solution not optimal");
  std::vector<AuditViolation> violations;
  const std::size_t m = lp.columns();
  for (std::size_t r = 0; r < lp.a_ineq.rows(); ++r) {
    double acc = -lp.b_ineq[r];
    for (std::size_t j = 0; j < m; ++j) acc += lp.a_ineq(r, j) * solution.x[j];
    if (acc > tol)
      violations.push_back({lp.ineq_labels.empty()
                                ? "ineq[" + std::to_string(r) + "]"
                                : lp.ineq_labels[r],
                            acc});
  }
  for (std::size_t r = 0; r < lp.a_eq.rows(); ++r) {
    double acc = -lp.b_eq[r];
    for (std::size_t j = 0; j < m; ++j) acc += lp.a_eq(r, j) * solution.x[j];
    if (std::abs(acc) > tol)
      violations.push_back({lp.eq_labels.empty()
                                ? "eq[" + std::to_string(r) + "]"
                                : lp.eq_labels[r],
                            std::abs(acc)});
  }
  for (std::size_t j = 0; j < m; ++j) {
    if (solution.x[j] < lp.lower[j] - tol)
      violations.push_back({"lower bound x" + std::to_string(j),
                            lp.lower[j] - solution.x[j]});
    if (solution.x[j] > lp.upper[j] + tol)
      violations.push_back({"upper bound x" + std::to_string(j),
                            solution.x[j] - lp.upper[j]});
  }
  return violations;
}

}  // namespace gridflex
