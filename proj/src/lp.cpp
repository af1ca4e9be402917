#include "gridflex/lp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "gridflex/kernels.hpp"

namespace gridflex {

const char* to_string(LpStatus status) {
  switch (status) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::NumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

namespace {

enum class VarState : std::uint8_t { Basic, AtLower, AtUpper, FreeZero };

/// Bounded-variable simplex over the standardized system
/// [A_eq; A_ineq] x + [0; I] s = [b_eq; b_ineq], with one artificial
/// (+-e_r) per row for phase 1.
class Simplex {
 public:
  Simplex(const LinearProgram& lp, const SimplexOptions& opt) : opt_(opt) {
    n_struct_ = lp.columns();
    n_eq_ = lp.a_eq.rows();
    n_ineq_ = lp.a_ineq.rows();
    rows_ = n_eq_ + n_ineq_;
    n_cols_ = n_struct_ + n_ineq_;  // artificials handled implicitly

    a_ = Matrix(rows_, n_cols_);
    rhs_.resize(rows_);
    for (std::size_t r = 0; r < n_eq_; ++r) {
      for (std::size_t j = 0; j < n_struct_; ++j) a_(r, j) = lp.a_eq(r, j);
      rhs_[r] = lp.b_eq[r];
    }
    for (std::size_t r = 0; r < n_ineq_; ++r) {
      const std::size_t row = n_eq_ + r;
      for (std::size_t j = 0; j < n_struct_; ++j)
        a_(row, j) = lp.a_ineq(r, j);
      a_(row, n_struct_ + r) = 1.0;
      rhs_[row] = lp.b_ineq[r];
    }

    lo_ = lp.lower;
    up_ = lp.upper;
    lo_.resize(n_cols_, 0.0);
    up_.resize(n_cols_, kInf);
    for (std::size_t s = 0; s < n_ineq_; ++s) {
      lo_[n_struct_ + s] = 0.0;
      up_[n_struct_ + s] = kInf;
    }

    cost_.assign(n_cols_, 0.0);
    for (std::size_t j = 0; j < n_struct_; ++j) cost_[j] = lp.cost[j];
  }

  LpSolution run() {
    LpSolution out;
    init_state();

    // phase 1: minimize sum of artificials
    phase1_ = true;
    const LpStatus st1 = iterate();
    if (st1 != LpStatus::Optimal) {
      out.status = st1 == LpStatus::Unbounded ? LpStatus::NumericalFailure : st1;
      out.message = "phase 1 did not terminate cleanly";
      out.iterations = iterations_;
      return out;
    }
    refactor();
    double infeas = 0.0;
    for (std::size_t r = 0; r < rows_; ++r)
      if (basis_[r] >= static_cast<int>(n_cols_))
        infeas += std::abs(xb_[r]);
    if (infeas > 1e-8) {
      out.status = LpStatus::Infeasible;
      out.iterations = iterations_;
      return out;
    }

    // phase 2: artificials pinned at zero
    phase1_ = false;
    degenerate_streak_ = 0;
    bland_ = false;
    const LpStatus st2 = iterate();
    out.iterations = iterations_;
    if (st2 != LpStatus::Optimal) {
      out.status = st2;
      return out;
    }

    refactor();
    out.x = extract_structural();
    out.objective = 0.0;
    for (std::size_t j = 0; j < n_struct_; ++j)
      out.objective += cost_[j] * out.x[j];
    out.status = LpStatus::Optimal;
    return out;
  }

 private:
  bool is_artificial(int j) const { return j >= static_cast<int>(n_cols_); }

  double column_entry(std::size_t r, int j) const {
    if (is_artificial(j)) {
      const auto row = static_cast<std::size_t>(j) - n_cols_;
      return r == row ? art_sign_[row] : 0.0;
    }
    return a_(r, static_cast<std::size_t>(j));
  }

  double nonbasic_value(int j) const {
    if (is_artificial(j)) return 0.0;
    switch (state_[static_cast<std::size_t>(j)]) {
      case VarState::AtLower: return lo_[static_cast<std::size_t>(j)];
      case VarState::AtUpper: return up_[static_cast<std::size_t>(j)];
      default: return 0.0;
    }
  }

  double effective_cost(int j) const {
    if (phase1_) return is_artificial(j) ? 1.0 : 0.0;
    return is_artificial(j) ? 0.0 : cost_[static_cast<std::size_t>(j)];
  }

  void init_state() {
    state_.assign(n_cols_, VarState::AtLower);
    for (std::size_t j = 0; j < n_cols_; ++j) {
      const bool lo_fin = std::isfinite(lo_[j]);
      const bool up_fin = std::isfinite(up_[j]);
      if (lo_fin && up_fin)
        state_[j] = std::abs(lo_[j]) <= std::abs(up_[j]) ? VarState::AtLower
                                                         : VarState::AtUpper;
      else if (lo_fin)
        state_[j] = VarState::AtLower;
      else if (up_fin)
        state_[j] = VarState::AtUpper;
      else
        state_[j] = VarState::FreeZero;
    }

    // artificial basis sized to the residuals of the nonbasic start point
    basis_.resize(rows_);
    art_sign_.assign(rows_, 1.0);
    xb_.assign(rows_, 0.0);
    binv_ = Matrix(rows_, rows_);
    for (std::size_t r = 0; r < rows_; ++r) {
      double residual = rhs_[r];
      for (std::size_t j = 0; j < n_cols_; ++j) {
        const double value = nonbasic_value(static_cast<int>(j));
        if (value != 0.0) residual -= a_(r, j) * value;
      }
      art_sign_[r] = residual >= 0.0 ? 1.0 : -1.0;
      basis_[r] = static_cast<int>(n_cols_ + r);
      binv_(r, r) = art_sign_[r];
      xb_[r] = std::abs(residual);
    }
    iterations_ = 0;
    degenerate_streak_ = 0;
    bland_ = false;
    pivots_since_refactor_ = 0;
  }

  void refactor() {
    Matrix b(rows_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < rows_; ++c)
        b(r, c) = column_entry(r, basis_[c]);
    auto factors = kernels::lu_factor(std::move(b), 1e-13);
    binv_ = kernels::lu_inverse(factors);

    std::vector<double> rhs_eff = rhs_;
    for (std::size_t j = 0; j < n_cols_; ++j) {
      if (state_[j] == VarState::Basic) continue;
      const double value = nonbasic_value(static_cast<int>(j));
      if (value == 0.0) continue;
      for (std::size_t r = 0; r < rows_; ++r) rhs_eff[r] -= a_(r, j) * value;
    }
    for (std::size_t r = 0; r < rows_; ++r) {
      double sum = 0.0;
      for (std::size_t c = 0; c < rows_; ++c) sum += binv_(r, c) * rhs_eff[c];
      xb_[r] = sum;
    }
    pivots_since_refactor_ = 0;
  }

  LpStatus iterate() {
    const double tol = opt_.tolerance;
    while (iterations_ < opt_.max_iterations) {
      // simplex multipliers y = c_B^T Binv
      std::vector<double> y(rows_, 0.0);
      for (std::size_t r = 0; r < rows_; ++r) {
        const double cb = effective_cost(basis_[r]);
        if (cb == 0.0) continue;
        for (std::size_t c = 0; c < rows_; ++c) y[c] += cb * binv_(r, c);
      }

      int entering = -1;
      int direction = 0;
      double best_score = tol;
      for (std::size_t j = 0; j < n_cols_; ++j) {
        if (state_[j] == VarState::Basic) continue;
        if (lo_[j] == up_[j]) continue;  // fixed
        double d = effective_cost(static_cast<int>(j));
        for (std::size_t r = 0; r < rows_; ++r) {
          const double arj = a_(r, j);
          if (arj != 0.0) d -= y[r] * arj;
        }
        int dir = 0;
        const VarState st = state_[j];
        if ((st == VarState::AtLower || st == VarState::FreeZero) && d < -tol)
          dir = +1;
        else if ((st == VarState::AtUpper || st == VarState::FreeZero) && d > tol)
          dir = -1;
        if (dir == 0) continue;
        if (bland_) {
          entering = static_cast<int>(j);
          direction = dir;
          break;
        }
        if (std::abs(d) > best_score) {
          best_score = std::abs(d);
          entering = static_cast<int>(j);
          direction = dir;
        }
      }
      if (entering < 0) return LpStatus::Optimal;

      // FTRAN
      std::vector<double> w(rows_, 0.0);
      for (std::size_t r = 0; r < rows_; ++r) {
        double sum = 0.0;
        for (std::size_t c = 0; c < rows_; ++c) {
          const double acj = a_(c, static_cast<std::size_t>(entering));
          if (acj != 0.0) sum += binv_(r, c) * acj;
        }
        w[r] = sum;
      }

      // ratio test
      const auto je = static_cast<std::size_t>(entering);
      double theta = kInf;
      int leave_row = -1;   // -1: entering hits its own opposite bound
      double leave_pivot = 0.0;
      if (std::isfinite(lo_[je]) && std::isfinite(up_[je]))
        theta = up_[je] - lo_[je];
      for (std::size_t r = 0; r < rows_; ++r) {
        const double rate = -direction * w[r];
        if (std::abs(rate) <= 1e-11) continue;
        const int jb = basis_[r];
        const double lob = is_artificial(jb) ? 0.0 : lo_[static_cast<std::size_t>(jb)];
        const double upb = is_artificial(jb) ? (phase1_ ? kInf : 0.0)
                                             : up_[static_cast<std::size_t>(jb)];
        double t;
        if (rate > 0.0) {
          if (!std::isfinite(upb)) continue;
          t = (upb - xb_[r]) / rate;
        } else {
          if (!std::isfinite(lob)) continue;
          t = (xb_[r] - lob) / (-rate);
        }
        if (t < 0.0) t = 0.0;
        bool take = false;
        if (t < theta - 1e-12) {
          take = true;
        } else if (t <= theta + 1e-12 && leave_row >= 0) {
          take = bland_ ? jb < basis_[leave_row]
                        : std::abs(w[r]) > std::abs(leave_pivot);
        }
        if (take) {
          theta = t;
          leave_row = static_cast<int>(r);
          leave_pivot = w[r];
        }
      }

      if (!std::isfinite(theta))
        return phase1_ ? LpStatus::NumericalFailure : LpStatus::Unbounded;

      if (theta < 1e-11)
        ++degenerate_streak_;
      else
        degenerate_streak_ = 0;
      if (degenerate_streak_ > 64) bland_ = true;

      if (leave_row < 0) {
        // bound flip, basis unchanged
        for (std::size_t r = 0; r < rows_; ++r)
          xb_[r] -= theta * direction * w[r];
        state_[je] =
            state_[je] == VarState::AtLower ? VarState::AtUpper : VarState::AtLower;
      } else {
        const auto lr = static_cast<std::size_t>(leave_row);
        const int leaving = basis_[lr];
        const double entering_start = nonbasic_value(entering);
        for (std::size_t r = 0; r < rows_; ++r)
          if (r != lr) xb_[r] -= theta * direction * w[r];

        if (!is_artificial(leaving)) {
          const double rate = -direction * w[lr];
          state_[static_cast<std::size_t>(leaving)] =
              rate > 0.0 ? VarState::AtUpper : VarState::AtLower;
        }
        basis_[lr] = entering;
        state_[je] = VarState::Basic;
        xb_[lr] = entering_start + direction * theta;

        // binv pivot update
        const double pivot = w[lr];
        const double inv_pivot = 1.0 / pivot;
        for (std::size_t c = 0; c < rows_; ++c) binv_(lr, c) *= inv_pivot;
        for (std::size_t r = 0; r < rows_; ++r) {
          if (r == lr) continue;
          const double factor = w[r];
          if (factor == 0.0) continue;
          for (std::size_t c = 0; c < rows_; ++c)
            binv_(r, c) -= factor * binv_(lr, c);
        }
        if (++pivots_since_refactor_ >= opt_.refactor_interval) refactor();
      }
      ++iterations_;
    }
    return LpStatus::NumericalFailure;  // iteration limit: cycling or stall
  }

  std::vector<double> extract_structural() const {
    std::vector<double> x(n_struct_, 0.0);
    for (std::size_t j = 0; j < n_struct_; ++j)
      if (state_[j] != VarState::Basic) x[j] = nonbasic_value(static_cast<int>(j));
    for (std::size_t r = 0; r < rows_; ++r)
      if (basis_[r] >= 0 && basis_[r] < static_cast<int>(n_struct_))
        x[static_cast<std::size_t>(basis_[r])] = xb_[r];
    return x;
  }

  SimplexOptions opt_;
  std::size_t n_struct_ = 0, n_eq_ = 0, n_ineq_ = 0, rows_ = 0, n_cols_ = 0;
  Matrix a_;
  std::vector<double> rhs_, lo_, up_, cost_;

  std::vector<int> basis_;
  std::vector<double> art_sign_;
  std::vector<double> xb_;
  Matrix binv_;
  std::vector<VarState> state_;
  bool phase1_ = true;
  bool bland_ = false;
  int iterations_ = 0;
  int degenerate_streak_ = 0;
  int pivots_since_refactor_ = 0;
};

}  // namespace

LpSolution solve_lp(const LinearProgram& lp, const SimplexOptions& options) {
  if (lp.cost.size() != lp.lower.size() || lp.cost.size() != lp.upper.size())
    throw std::invalid_argument("solve_lp: bounds/cost size mismatch");
  if (!lp.a_ineq.empty() && lp.a_ineq.cols() != lp.columns())
    throw std::invalid_argument("solve_lp: a_ineq column mismatch");
  if (!lp.a_eq.empty() && lp.a_eq.cols() != lp.columns())
    throw std::invalid_argument("solve_lp: a_eq column mismatch");

  Simplex simplex(lp, options);
  LpSolution sol = simplex.run();

  if (sol.status == LpStatus::Optimal) {
    // independent residual screen before declaring optimality
    double worst = 0.0;
    for (std::size_t r = 0; r < lp.a_eq.rows(); ++r) {
      double acc = -lp.b_eq[r];
      for (std::size_t j = 0; j < lp.columns(); ++j)
        acc += lp.a_eq(r, j) * sol.x[j];
      worst = std::max(worst, std::abs(acc));
    }
    for (std::size_t r = 0; r < lp.a_ineq.rows(); ++r) {
      double acc = -lp.b_ineq[r];
      for (std::size_t j = 0; j < lp.columns(); ++j)
        acc += lp.a_ineq(r, j) * sol.x[j];
      worst = std::max(worst, acc);
    }
    if (worst > options.tolerance) {
      sol.status = LpStatus::NumericalFailure;
      sol.message = "optimal basis failed the residual screen (" +
                    std::to_string(worst) + ")";
    }
  }
  return sol;
}

LinearProgram assemble_for_lp(const SensitivityBundle& bundle,
                              const GridCase& grid,
                              const SampleBounds& sample_bounds,
                              const ObjectiveWeights& weights,
                              double q_thresh) {
  const std::size_t n = grid.bus_count();
  const std::size_t b = grid.branch_count();
  const std::size_t ic = grid.interconnections.size();
  if (bundle.j_inv_full.rows() != 2 * n || bundle.pq_t_p.rows() != 2 * b ||
      bundle.operating_point.v.size() != n)
    throw std::invalid_argument(
        "assemble_for_lp: bundle and case disagree on the operating point");
  if (sample_bounds.dp_lower.size() != n || sample_bounds.dq_lower.size() != n)
    throw std::invalid_argument("assemble_for_lp: sample bounds length != n");
  if (weights.priority_interconnection >= ic)
    throw std::invalid_argument("assemble_for_lp: priority interconnection index");

  LinearProgram lp;
  lp.bus_count = n;
  lp.ic_count = ic;
  const std::size_t m = 4 * n + 2 * ic;

  lp.cost.assign(m, 0.0);
  for (std::size_t e = 0; e < ic; ++e)
    lp.cost[lp.var_slack_q(e)] =
        e == weights.priority_interconnection ? weights.priority_q : weights.other_q;
  for (std::size_t d = 0; d < n; ++d) {
    double dir = 0.0;
    if (sample_bounds.dp_lower[d] < 0.0)
      dir = -1.0;
    else if (sample_bounds.dp_upper[d] > 0.0)
      dir = 1.0;
    lp.cost[lp.var_dp(d)] = weights.dp * dir;
  }

  lp.lower.assign(m, -kInf);
  lp.upper.assign(m, kInf);
  for (std::size_t d = 0; d < n; ++d) {
    lp.lower[lp.var_dp(d)] = sample_bounds.dp_lower[d];
    lp.upper[lp.var_dp(d)] = sample_bounds.dp_upper[d];
    lp.lower[lp.var_dq(d)] = sample_bounds.dq_lower[d];
    lp.upper[lp.var_dq(d)] = sample_bounds.dq_upper[d];
  }

  const auto& op = bundle.operating_point;
  std::size_t current_rows = 0;
  for (std::size_t t = 0; t < 2 * b; ++t)
    if (bundle.current_ok[t]) ++current_rows;

  lp.a_ineq = Matrix(4 * n + current_rows, m);
  lp.b_ineq.assign(4 * n + current_rows, 0.0);
  lp.ineq_labels.resize(4 * n + current_rows);

  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r_ub = i, r_lb = n + i;
    for (std::size_t j = 0; j < n; ++j) {
      const double dp = bundle.j_inv_full(i, j);
      const double dq = bundle.j_inv_full(i, n + j);
      lp.a_ineq(r_ub, lp.var_dp(j)) = dp;
      lp.a_ineq(r_ub, lp.var_dq(j)) = dq;
      lp.a_ineq(r_lb, lp.var_dp(j)) = -dp;
      lp.a_ineq(r_lb, lp.var_dq(j)) = -dq;
    }
    lp.b_ineq[r_ub] = grid.limits.delta_max[i] - op.delta[i];
    lp.b_ineq[r_lb] = -(grid.limits.delta_min[i] - op.delta[i]);
    lp.ineq_labels[r_ub] = "angle_ub[" + std::to_string(i) + "]";
    lp.ineq_labels[r_lb] = "angle_lb[" + std::to_string(i) + "]";
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r_ub = 2 * n + i, r_lb = 3 * n + i;
    for (std::size_t j = 0; j < n; ++j) {
      const double dp = bundle.j_inv_full(n + i, j);
      const double dq = bundle.j_inv_full(n + i, n + j);
      lp.a_ineq(r_ub, lp.var_dp(j)) = dp;
      lp.a_ineq(r_ub, lp.var_dq(j)) = dq;
      lp.a_ineq(r_lb, lp.var_dp(j)) = -dp;
      lp.a_ineq(r_lb, lp.var_dq(j)) = -dq;
    }
    lp.b_ineq[r_ub] = grid.limits.v_max[i] - op.v[i];
    lp.b_ineq[r_lb] = -(grid.limits.v_min[i] - op.v[i]);
    lp.ineq_labels[r_ub] = "v_ub[" + std::to_string(i) + "]";
    lp.ineq_labels[r_lb] = "v_lb[" + std::to_string(i) + "]";
  }
  std::size_t row = 4 * n;
  for (std::size_t t = 0; t < 2 * b; ++t) {
    if (!bundle.current_ok[t]) continue;
    const std::size_t k = t < b ? t : t - b;
    for (std::size_t j = 0; j < n; ++j) {
      lp.a_ineq(row, lp.var_ddelta(j)) = bundle.id_tb(t, j);
      lp.a_ineq(row, lp.var_dv(j)) = bundle.iu_tb(t, j);
    }
    const double i0 = bundle.current_base[t];
    lp.b_ineq[row] =
        (grid.branches[k].thermal_current_limit - i0) / i0;
    lp.ineq_labels[row] = "current[" + std::to_string(k) +
                          (t < b ? ":from]" : ":to]");
    ++row;
  }

  lp.a_eq = Matrix(2 * n + 2 * ic + 1, m);
  lp.b_eq.assign(2 * n + 2 * ic + 1, 0.0);
  lp.eq_labels.resize(2 * n + 2 * ic + 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      lp.a_eq(i, lp.var_dp(j)) = bundle.j_inv_full(i, j);
      lp.a_eq(i, lp.var_dq(j)) = bundle.j_inv_full(i, n + j);
      lp.a_eq(n + i, lp.var_dp(j)) = bundle.j_inv_full(n + i, j);
      lp.a_eq(n + i, lp.var_dq(j)) = bundle.j_inv_full(n + i, n + j);
    }
    lp.a_eq(i, lp.var_ddelta(i)) = -1.0;
    lp.a_eq(n + i, lp.var_dv(i)) = -1.0;
    lp.eq_labels[i] = "couple_delta[" + std::to_string(i) + "]";
    lp.eq_labels[n + i] = "couple_v[" + std::to_string(i) + "]";
  }
  for (std::size_t e = 0; e < ic; ++e) {
    const auto kb = static_cast<std::size_t>(grid.interconnections[e]);
    const std::size_t rp = 2 * n + e, rq = 2 * n + ic + e;
    for (std::size_t j = 0; j < n; ++j) {
      lp.a_eq(rp, lp.var_dp(j)) = bundle.pq_t_p(kb, j);
      lp.a_eq(rp, lp.var_dq(j)) = bundle.pq_t_q(kb, j);
      lp.a_eq(rq, lp.var_dp(j)) = bundle.pq_t_p(b + kb, j);
      lp.a_eq(rq, lp.var_dq(j)) = bundle.pq_t_q(b + kb, j);
    }
    lp.a_eq(rp, lp.var_slack_p(e)) = -1.0;
    lp.a_eq(rq, lp.var_slack_q(e)) = -1.0;
    lp.eq_labels[rp] = "ic_slack_p[" + std::to_string(e) + "]";
    lp.eq_labels[rq] = "ic_slack_q[" + std::to_string(e) + "]";
  }
  const std::size_t r_thresh = 2 * n + 2 * ic;
  std::set<int> flex_buses;
  for (const auto& flex : grid.flexibilities) flex_buses.insert(flex.bus);
  for (int d : flex_buses)
    lp.a_eq(r_thresh, lp.var_dq(static_cast<std::size_t>(d))) = 1.0;
  lp.b_eq[r_thresh] = q_thresh;
  lp.eq_labels[r_thresh] = "q_thresh";

  return lp;
}

void write_lp_debug(const LinearProgram& lp, const std::string& prefix) {
  const auto dump_matrix = [](std::ofstream& out, const Matrix& a,
                              const std::vector<double>& b,
                              const std::vector<std::string>& labels) {
    out << "label";
    for (std::size_t j = 0; j < a.cols(); ++j) out << ",x" << j;
    out << ",rhs\n";
    char buf[32];
    for (std::size_t r = 0; r < a.rows(); ++r) {
      out << labels[r];
      for (std::size_t j = 0; j < a.cols(); ++j) {
        std::snprintf(buf, sizeof buf, "%.17g", a(r, j));
        out << ',' << buf;
      }
      std::snprintf(buf, sizeof buf, "%.17g", b[r]);
      out << ',' << buf << '\n';
    }
  };

  std::ofstream cost(prefix + "_cost.csv");
  cost << "var,cost,lower,upper\n";
  char buf[32];
  for (std::size_t j = 0; j < lp.columns(); ++j) {
    std::snprintf(buf, sizeof buf, "%.17g", lp.cost[j]);
    cost << 'x' << j << ',' << buf;
    std::snprintf(buf, sizeof buf, "%.17g", lp.lower[j]);
    cost << ',' << buf;
    std::snprintf(buf, sizeof buf, "%.17g", lp.upper[j]);
    cost << ',' << buf << '\n';
  }
  std::ofstream ineq(prefix + "_ineq.csv");
  dump_matrix(ineq, lp.a_ineq, lp.b_ineq, lp.ineq_labels);
  std::ofstream eq(prefix + "_eq.csv");
  dump_matrix(eq, lp.a_eq, lp.b_eq, lp.eq_labels);
}

}  // namespace gridflex
