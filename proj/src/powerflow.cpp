#include "gridflex/powerflow.hpp"

#include <cmath>

#include "gridflex/sensitivity.hpp"

namespace gridflex {

void compute_bus_injections(const AdmittanceMatrix& ybus,
                            std::span<const double> v,
                            std::span<const double> delta,
                            std::span<double> p_out, std::span<double> q_out) {
  const std::size_t n = ybus.n;
  for (std::size_t i = 0; i < n; ++i) {
    double p = v[i] * v[i] * ybus.magnitude(i, i) * std::cos(ybus.phase(i, i));
    double q = -v[i] * v[i] * ybus.magnitude(i, i) * std::sin(ybus.phase(i, i));
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double y = ybus.magnitude(i, j);
      if (y == 0.0) continue;
      const double angle = delta[i] - delta[j] - ybus.phase(i, j);
      p += v[i] * v[j] * y * std::cos(angle);
      q += v[i] * v[j] * y * std::sin(angle);
    }
    p_out[i] = p;
    q_out[i] = q;
  }
}

std::vector<double> scheduled_p(const GridCase& grid) {
  std::vector<double> sched(grid.bus_count(), 0.0);
  for (const auto& bus : grid.buses)
    if (bus.kind != BusKind::Slack) sched[bus.index] = bus.p_inj;
  return sched;
}

std::vector<double> scheduled_q(const GridCase& grid) {
  std::vector<double> sched(grid.bus_count(), 0.0);
  for (const auto& bus : grid.buses)
    if (bus.kind != BusKind::Slack) sched[bus.index] = bus.q_inj;
  return sched;
}

PowerFlowSolution solve_newton_raphson(const GridCase& grid,
                                       const NewtonOptions& options) {
  return solve_newton_raphson(grid, build_admittance(grid), options);
}

PowerFlowSolution solve_newton_raphson(const GridCase& grid,
                                       const AdmittanceMatrix& ybus,
                                       const NewtonOptions& options) {
  const std::size_t n = grid.bus_count();
  const auto slack = static_cast<std::size_t>(grid.slack_bus);

  PowerFlowSolution sol;
  sol.v.assign(n, 1.0);
  sol.delta.assign(n, 0.0);
  if (!options.flat_start) {
    // no stored state beyond flat profile; kept for API symmetry
  }
  sol.p.assign(n, 0.0);
  sol.q.assign(n, 0.0);

  const std::vector<double> p_sched = scheduled_p(grid);
  const std::vector<double> q_sched = scheduled_q(grid);

  // non-slack bus ordering for the mismatch/unknown vectors
  std::vector<std::size_t> reduced;
  reduced.reserve(n - 1);
  for (std::size_t i = 0; i < n; ++i)
    if (i != slack) reduced.push_back(i);
  const std::size_t r = reduced.size();

  std::vector<double> mismatch(2 * r, 0.0);

  const auto eval_mismatch = [&]() {
    compute_bus_injections(ybus, sol.v, sol.delta, sol.p, sol.q);
    double worst = 0.0;
    for (std::size_t k = 0; k < r; ++k) {
      const std::size_t i = reduced[k];
      mismatch[k] = p_sched[i] - sol.p[i];
      mismatch[r + k] = q_sched[i] - sol.q[i];
      worst = std::max(worst, std::abs(mismatch[k]));
      worst = std::max(worst, std::abs(mismatch[r + k]));
    }
    return worst;
  };

  double worst = eval_mismatch();
  sol.report.mismatch_history.push_back(worst);
  int iter = 0;
  while (worst > options.tolerance && iter < options.max_iter) {
    const Matrix jac = build_jacobian(grid, ybus, sol.v, sol.delta);
    auto factors = kernels::lu_factor(jac, 1e-12);
    kernels::lu_solve(factors, mismatch);  // in place: correction vector
    for (std::size_t k = 0; k < r; ++k) {
      sol.delta[reduced[k]] += mismatch[k];
      sol.v[reduced[k]] += mismatch[r + k];
    }
    ++iter;
    worst = eval_mismatch();
    sol.report.mismatch_history.push_back(worst);
  }

  sol.report.iterations = iter;
  sol.report.final_mismatch = worst;
  sol.report.converged = worst <= options.tolerance;
  if (sol.report.converged) {
    compute_branch_flows(grid, sol.v, sol.delta, sol.branch_p, sol.branch_q);
    compute_branch_currents(grid, sol.v, sol.delta, sol.branch_i);
  }
  return sol;
}

void compute_branch_flows(const GridCase& grid, std::span<const double> v,
                          std::span<const double> delta,
                          std::vector<std::array<double, 2>>& branch_p,
                          std::vector<std::array<double, 2>>& branch_q) {
  const std::size_t b = grid.branch_count();
  branch_p.assign(b, {0.0, 0.0});
  branch_q.assign(b, {0.0, 0.0});
  for (std::size_t k = 0; k < b; ++k) {
    const Branch& br = grid.branches[k];
    const std::complex<double> y_series = 1.0 / br.series_impedance;
    const std::complex<double> y_self = y_series + 0.5 * br.total_shunt_admittance;
    const std::complex<double> y_transfer = -y_series;
    const double y_ii = std::abs(y_self), th_ii = std::arg(y_self);
    const double y_ij = std::abs(y_transfer), th_ij = std::arg(y_transfer);
    for (int t = 0; t < 2; ++t) {
      const auto i = static_cast<std::size_t>(t == 0 ? br.from_bus : br.to_bus);
      const auto j = static_cast<std::size_t>(t == 0 ? br.to_bus : br.from_bus);
      const double angle = delta[i] - delta[j] - th_ij;
      branch_p[k][t] = v[i] * v[i] * y_ii * std::cos(th_ii) +
                       v[i] * v[j] * y_ij * std::cos(angle);
      branch_q[k][t] = -v[i] * v[i] * y_ii * std::sin(th_ii) +
                       v[i] * v[j] * y_ij * std::sin(angle);
    }
  }
}

void compute_branch_currents(const GridCase& grid, std::span<const double> v,
                             std::span<const double> delta,
                             std::vector<std::array<double, 2>>& branch_i) {
  const std::size_t b = grid.branch_count();
  branch_i.assign(b, {0.0, 0.0});
  for (std::size_t k = 0; k < b; ++k) {
    const Branch& br = grid.branches[k];
    const std::complex<double> y_series = 1.0 / br.series_impedance;
    const std::complex<double> y_half = 0.5 * br.total_shunt_admittance;
    for (int t = 0; t < 2; ++t) {
      const auto i = static_cast<std::size_t>(t == 0 ? br.from_bus : br.to_bus);
      const auto j = static_cast<std::size_t>(t == 0 ? br.to_bus : br.from_bus);
      const std::complex<double> vi = std::polar(v[i], delta[i]);
      const std::complex<double> vj = std::polar(v[j], delta[j]);
      branch_i[k][t] = std::abs(y_series * (vi - vj) + y_half * vi);
    }
  }
}

}  // namespace gridflex
