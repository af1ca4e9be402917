#include "gridflex/sensitivity.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

#include "gridflex/kernels.hpp"

namespace gridflex {

namespace {

std::vector<std::size_t> non_slack_order(const GridCase& grid) {
  std::vector<std::size_t> reduced;
  reduced.reserve(grid.bus_count() - 1);
  for (std::size_t i = 0; i < grid.bus_count(); ++i)
    if (static_cast<int>(i) != grid.slack_bus) reduced.push_back(i);
  return reduced;
}

}  // namespace

Matrix build_jacobian(const GridCase& grid, const AdmittanceMatrix& ybus,
                      std::span<const double> v,
                      std::span<const double> delta) {
  const std::size_t n = grid.bus_count();
  const auto reduced = non_slack_order(grid);
  const std::size_t r = reduced.size();
  Matrix jac(2 * r, 2 * r);

  for (std::size_t a = 0; a < r; ++a) {
    const std::size_t i = reduced[a];
    double dp_ddi = 0.0, dp_dvi = 0.0, dq_ddi = 0.0, dq_dvi = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double y = ybus.magnitude(i, j);
      if (y == 0.0) continue;
      const double angle = delta[i] - delta[j] - ybus.phase(i, j);
      const double cs = std::cos(angle), sn = std::sin(angle);
      dp_ddi -= v[i] * v[j] * y * sn;
      dp_dvi += v[j] * y * cs;
      dq_ddi += v[i] * v[j] * y * cs;
      dq_dvi += v[j] * y * sn;
    }
    const double y_ii = ybus.magnitude(i, i);
    const double th_ii = ybus.phase(i, i);
    dp_dvi += 2.0 * v[i] * y_ii * std::cos(th_ii);
    dq_dvi -= 2.0 * v[i] * y_ii * std::sin(th_ii);

    jac(a, a) = dp_ddi;
    jac(a, r + a) = dp_dvi;
    jac(r + a, a) = dq_ddi;
    jac(r + a, r + a) = dq_dvi;

    for (std::size_t c = 0; c < r; ++c) {
      if (c == a) continue;
      const std::size_t j = reduced[c];
      const double y = ybus.magnitude(i, j);
      if (y == 0.0) continue;
      const double angle = delta[i] - delta[j] - ybus.phase(i, j);
      const double cs = std::cos(angle), sn = std::sin(angle);
      jac(a, c) = v[i] * v[j] * y * sn;        // dp_i/ddelta_j
      jac(a, r + c) = v[i] * y * cs;           // dp_i/dv_j
      jac(r + a, c) = -v[i] * v[j] * y * cs;   // dq_i/ddelta_j
      jac(r + a, r + c) = v[i] * y * sn;       // dq_i/dv_j
    }
  }
  return jac;
}

Matrix build_jacobian(const GridCase& grid, const AdmittanceMatrix& ybus,
                      const PowerFlowSolution& solution) {
  return build_jacobian(grid, ybus, solution.v, solution.delta);
}

Matrix invert_jacobian(const Matrix& jacobian, std::size_t bus_count,
                       int slack_bus, double condition_limit) {
  const std::size_t r = jacobian.rows() / 2;
  const auto factors = kernels::lu_factor(jacobian, 1e-12);
  const Matrix inv = kernels::lu_inverse(factors);
  const double cond = kernels::condition_1(jacobian, inv);
  if (cond > condition_limit)
    throw IllConditionedError(
        "Jacobian condition estimate " + std::to_string(cond) +
        " exceeds limit; operating point unsuitable for linearization");

  // embed: rows (delta, v), cols (p, q) over all buses, slack zero-padded
  const std::size_t n = bus_count;
  Matrix full(2 * n, 2 * n);
  std::vector<std::size_t> pos;  // reduced position -> bus index
  pos.reserve(r);
  for (std::size_t i = 0; i < n; ++i)
    if (static_cast<int>(i) != slack_bus) pos.push_back(i);
  for (std::size_t a = 0; a < r; ++a) {
    for (std::size_t c = 0; c < r; ++c) {
      const std::size_t bi = pos[a], bj = pos[c];
      full(bi, bj) = inv(a, c);              // ddelta/dp
      full(bi, n + bj) = inv(a, r + c);      // ddelta/dq
      full(n + bi, bj) = inv(r + a, c);      // dv/dp
      full(n + bi, n + bj) = inv(r + a, r + c);  // dv/dq
    }
  }
  return full;
}

Matrix branch_terminal_sensitivities(const GridCase& grid,
                                     const PowerFlowSolution& solution) {
  const std::size_t n = grid.bus_count();
  const std::size_t b = grid.branch_count();
  const auto& v = solution.v;
  const auto& delta = solution.delta;
  Matrix out(2 * b, 2 * n);

  for (std::size_t k = 0; k < b; ++k) {
    const Branch& br = grid.branches[k];
    const std::complex<double> y_series = 1.0 / br.series_impedance;
    const std::complex<double> y_self =
        y_series + 0.5 * br.total_shunt_admittance;
    const std::complex<double> y_transfer = -y_series;
    const double y_ii = std::abs(y_self), th_ii = std::arg(y_self);
    const double y_ij = std::abs(y_transfer), th_ij = std::arg(y_transfer);
    const auto i = static_cast<std::size_t>(br.from_bus);
    const auto j = static_cast<std::size_t>(br.to_bus);
    const double angle = delta[i] - delta[j] - th_ij;
    const double cs = std::cos(angle), sn = std::sin(angle);

    out(k, i) = -v[i] * v[j] * y_ij * sn;
    out(k, j) = v[i] * v[j] * y_ij * sn;
    out(k, n + i) = 2.0 * v[i] * y_ii * std::cos(th_ii) + v[j] * y_ij * cs;
    out(k, n + j) = v[i] * y_ij * cs;

    out(b + k, i) = v[i] * v[j] * y_ij * cs;
    out(b + k, j) = -v[i] * v[j] * y_ij * cs;
    out(b + k, n + i) =
        -2.0 * v[i] * y_ii * std::sin(th_ii) + v[j] * y_ij * sn;
    out(b + k, n + j) = v[i] * y_ij * sn;
  }
  return out;
}

void transform_to_injection_ptdf(const Matrix& pq_t_dv,
                                 const Matrix& j_inv_full, Matrix& pq_t_pq,
                                 Matrix& pq_t_p, Matrix& pq_t_q) {
  if (pq_t_dv.cols() != j_inv_full.rows())
    throw std::invalid_argument("transform_to_injection_ptdf: dimension mismatch");
  pq_t_pq = kernels::matmul(pq_t_dv, j_inv_full);
  const std::size_t rows = pq_t_pq.rows();
  const std::size_t n = pq_t_pq.cols() / 2;
  pq_t_p = Matrix(rows, n);
  pq_t_q = Matrix(rows, n);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      pq_t_p(i, j) = pq_t_pq(i, j);
      pq_t_q(i, j) = pq_t_pq(i, n + j);
    }
  }
}

void current_sensitivities(const GridCase& grid,
                           const PowerFlowSolution& solution, double i_floor,
                           Matrix& id_tb, Matrix& iu_tb,
                           std::vector<double>& current_base,
                           std::vector<std::uint8_t>& current_ok) {
  const std::size_t n = grid.bus_count();
  const std::size_t b = grid.branch_count();
  id_tb = Matrix(2 * b, n);
  iu_tb = Matrix(2 * b, n);
  current_base.assign(2 * b, 0.0);
  current_ok.assign(2 * b, 0);

  for (std::size_t k = 0; k < b; ++k) {
    const Branch& br = grid.branches[k];
    const std::complex<double> y_series = 1.0 / br.series_impedance;
    const std::complex<double> y_half = 0.5 * br.total_shunt_admittance;
    for (int t = 0; t < 2; ++t) {
      const std::size_t row = t == 0 ? k : b + k;
      const auto i = static_cast<std::size_t>(t == 0 ? br.from_bus : br.to_bus);
      const auto j = static_cast<std::size_t>(t == 0 ? br.to_bus : br.from_bus);
      const std::complex<double> own = y_series + y_half;   // multiplies V_i
      const std::complex<double> other = -y_series;         // multiplies V_j
      const std::complex<double> vi = std::polar(solution.v[i], solution.delta[i]);
      const std::complex<double> vj = std::polar(solution.v[j], solution.delta[j]);
      const std::complex<double> current = own * vi + other * vj;
      const double mag = std::abs(current);
      current_base[row] = mag;
      if (mag <= i_floor) continue;  // flagged out, row stays zero
      current_ok[row] = 1;
      const std::complex<double> conj_i = std::conj(current);
      const std::complex<double> ji{0.0, 1.0};
      const double inv_sq = 1.0 / (mag * mag);  // d|I|/dx / i0 = Re(conj(I) dI/dx)/|I|^2
      id_tb(row, i) = (conj_i * ji * own * vi).real() * inv_sq;
      id_tb(row, j) = (conj_i * ji * other * vj).real() * inv_sq;
      iu_tb(row, i) = (conj_i * own * std::polar(1.0, solution.delta[i])).real() * inv_sq;
      iu_tb(row, j) = (conj_i * other * std::polar(1.0, solution.delta[j])).real() * inv_sq;
    }
  }
}

SensitivityBundle build_sensitivity_bundle(const GridCase& grid,
                                           const AdmittanceMatrix& ybus,
                                           const PowerFlowSolution& solution,
                                           const SensitivityOptions& options) {
  if (!solution.report.converged)
    throw std::invalid_argument(
        "build_sensitivity_bundle: operating point not converged");
  SensitivityBundle bundle;
  bundle.jacobian = build_jacobian(grid, ybus, solution);
  bundle.j_inv_full = invert_jacobian(bundle.jacobian, grid.bus_count(),
                                      grid.slack_bus, options.condition_limit);
  bundle.pq_t_dv = branch_terminal_sensitivities(grid, solution);
  transform_to_injection_ptdf(bundle.pq_t_dv, bundle.j_inv_full,
                              bundle.pq_t_pq, bundle.pq_t_p, bundle.pq_t_q);
  current_sensitivities(grid, solution, options.i_floor, bundle.id_tb,
                        bundle.iu_tb, bundle.current_base, bundle.current_ok);
  bundle.operating_point = solution;
  return bundle;
}

}  // namespace gridflex
