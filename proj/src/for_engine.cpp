#include "gridflex/for_engine.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace gridflex {

using nlohmann::json;

const char* to_string(SweepDir dir) {
  return dir == SweepDir::Upper ? "upper" : "lower";
}

Scenario load_scenario(const std::string& text, const GridCase& grid) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid scenario JSON: ") + e.what());
  }
  Scenario sc;
  sc.name = doc.value("name", std::string("scenario"));
  if (!doc.contains("priority_interconnection"))
    throw ParseError("scenario: missing 'priority_interconnection'");
  sc.priority_interconnection = doc.at("priority_interconnection").get<int>();
  if (doc.contains("weights")) {
    const json& w = doc.at("weights");
    sc.weight_priority_q = w.value("priority_q", sc.weight_priority_q);
    sc.weight_other_q = w.value("other_q", sc.weight_other_q);
    sc.weight_dp = w.value("dp", sc.weight_dp);
  }
  if (!doc.contains("q_thresh_pos_mvar") || !doc.contains("q_thresh_neg_mvar"))
    throw ParseError("scenario: missing q_thresh_pos_mvar/q_thresh_neg_mvar");
  sc.q_thresh_pos = doc.at("q_thresh_pos_mvar").get<double>() / grid.base_power;
  sc.q_thresh_neg = doc.at("q_thresh_neg_mvar").get<double>() / grid.base_power;
  sc.k_max = doc.value("k_max", sc.k_max);
  sc.relinearize = doc.value("relinearize", sc.relinearize);

  if (sc.priority_interconnection < 0 ||
      sc.priority_interconnection >=
          static_cast<int>(grid.interconnections.size()))
    throw ValidationError({"scenario '" + sc.name +
                           "': priority_interconnection " +
                           std::to_string(sc.priority_interconnection) +
                           " is not a valid interconnection index"});
  std::vector<std::string> diags;
  if (!(sc.q_thresh_pos > 0.0))
    diags.push_back("scenario '" + sc.name + "': q_thresh_pos must be > 0");
  if (!(sc.q_thresh_neg < 0.0))
    diags.push_back("scenario '" + sc.name + "': q_thresh_neg must be < 0");
  if (sc.k_max < 1)
    diags.push_back("scenario '" + sc.name + "': k_max must be >= 1");
  if (!diags.empty()) throw ValidationError(std::move(diags));
  return sc;
}

Scenario load_scenario_file(const std::string& path, const GridCase& grid) {
  std::ifstream in(path);
  if (!in) throw ParseError("file not found: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return load_scenario(buf.str(), grid);
}

NodeFlexibility aggregate_rectangular_flexibilities(
    std::span<const NodeFlexibility> envelopes) {
  if (envelopes.empty())
    throw std::invalid_argument(
        "aggregate_rectangular_flexibilities: empty envelope list");
  NodeFlexibility agg = envelopes.front();
  for (std::size_t i = 1; i < envelopes.size(); ++i) {
    const auto& e = envelopes[i];
    if (e.bus != agg.bus)
      throw std::invalid_argument(
          "aggregate_rectangular_flexibilities: mixed bus indices");
    agg.delta_p_min += e.delta_p_min;
    agg.delta_p_max += e.delta_p_max;
    agg.delta_q_min += e.delta_q_min;
    agg.delta_q_max += e.delta_q_max;
  }
  return agg;
}

FlexStep discretize_flexibility(const NodeFlexibility& flex, int k_max) {
  if (k_max < 1)
    throw std::invalid_argument("discretize_flexibility: k_max must be >= 1");
  FlexStep step;
  step.bus = flex.bus;
  step.p_step = flex.delta_p_min / static_cast<double>(k_max);
  step.dq_min = flex.delta_q_min;
  step.dq_max = flex.delta_q_max;
  return step;
}

namespace {

/// One aggregated envelope per bus, in ascending bus order.
std::vector<NodeFlexibility> aggregate_by_bus(const GridCase& grid) {
  std::map<int, std::vector<NodeFlexibility>> grouped;
  for (const auto& flex : grid.flexibilities)
    grouped[flex.bus].push_back(flex);
  std::vector<NodeFlexibility> out;
  out.reserve(grouped.size());
  for (const auto& [bus, list] : grouped)
    out.push_back(aggregate_rectangular_flexibilities(list));
  return out;
}

}  // namespace

FlexDiscretization discretize_case_flexibilities(const GridCase& grid,
                                                 int k_max) {
  FlexDiscretization disc;
  disc.k_max = k_max;
  for (const auto& flex : aggregate_by_bus(grid))
    disc.steps.push_back(discretize_flexibility(flex, k_max));
  return disc;
}

GridCase update_operating_point(const GridCase& grid, const LinearProgram& lp,
                                const LpSolution& solution,
                                std::vector<std::string>* warnings) {
  if (solution.status != LpStatus::Optimal)
    throw std::invalid_argument("update_operating_point: solution not optimal");
  GridCase next = grid;
  next.flexibilities = aggregate_by_bus(grid);
  for (auto& flex : next.flexibilities) {
    const auto bus = static_cast<std::size_t>(flex.bus);
    const double dp = solution.x[lp.var_dp(bus)];
    const double dq = solution.x[lp.var_dq(bus)];
    next.buses[bus].p_inj += dp;
    next.buses[bus].q_inj += dq;
    flex.delta_p_min -= dp;
    flex.delta_p_max -= dp;
    flex.delta_q_min -= dq;
    flex.delta_q_max -= dq;
    const auto clamp_warn = [&](double& value, bool is_min, const char* what) {
      if ((is_min && value > 0.0) || (!is_min && value < 0.0)) {
        if (warnings)
          warnings->push_back("bus " + std::to_string(flex.bus) +
                              ": remaining " + what +
                              " budget crossed zero; clamped");
        value = 0.0;
      }
    };
    clamp_warn(flex.delta_p_min, true, "delta_p_min");
    clamp_warn(flex.delta_p_max, false, "delta_p_max");
    clamp_warn(flex.delta_q_min, true, "delta_q_min");
    clamp_warn(flex.delta_q_max, false, "delta_q_max");
  }
  return next;
}

namespace {

struct SweepState {
  GridCase work;
  SensitivityBundle bundle;
  // frozen mode: accumulated first-order state predictions
  std::vector<double> accum_ddelta, accum_dv, accum_di_rel;
};

std::vector<double> interconnection_flows(const GridCase& grid,
                                          const PowerFlowSolution& sol,
                                          bool reactive) {
  std::vector<double> out;
  out.reserve(grid.interconnections.size());
  for (int kb : grid.interconnections) {
    const auto k = static_cast<std::size_t>(kb);
    out.push_back(reactive ? sol.branch_q[k][0] : sol.branch_p[k][0]);
  }
  return out;
}

}  // namespace

AggregationRun run_for_determination(const GridCase& grid,
                                     const Scenario& scenario,
                                     const RunOptions& options) {
  if (grid.interconnections.empty())
    throw std::invalid_argument("run_for_determination: no interconnections");
  if (grid.flexibilities.empty())
    throw std::invalid_argument("run_for_determination: no flexibilities");

  AggregationRun run;
  run.base_case = grid;
  run.scenario = scenario;

  const AdmittanceMatrix base_y = build_admittance(grid);
  const PowerFlowSolution base_sol =
      solve_newton_raphson(grid, base_y, options.newton);
  if (!base_sol.report.converged)
    throw std::runtime_error(
        "run_for_determination: base power flow did not converge");
  const SensitivityBundle base_bundle =
      build_sensitivity_bundle(grid, base_y, base_sol, options.sensitivity);

  const std::size_t n = grid.bus_count();
  const std::size_t b = grid.branch_count();
  const std::size_t ic = grid.interconnections.size();
  const std::vector<double> base_p_vert =
      interconnection_flows(grid, base_sol, false);
  const std::vector<double> base_q_vert =
      interconnection_flows(grid, base_sol, true);

  const FlexDiscretization disc =
      discretize_case_flexibilities(grid, scenario.k_max);

  const auto run_sweep = [&](SweepDir dir) {
    SweepState st;
    st.work = grid;
    st.work.flexibilities = aggregate_by_bus(grid);
    st.bundle = base_bundle;
    st.accum_ddelta.assign(n, 0.0);
    st.accum_dv.assign(n, 0.0);
    st.accum_di_rel.assign(2 * b, 0.0);

    std::vector<double> accum_slack_p(ic, 0.0), accum_slack_q(ic, 0.0);

    SampleRecord base_rec;
    base_rec.sample = 0;
    base_rec.sweep = dir;
    base_rec.lp_status = "base";
    base_rec.executed = true;
    base_rec.p_vert = base_p_vert;
    base_rec.q_vert = base_q_vert;
    run.samples.push_back(base_rec);

    ObjectiveWeights weights;
    weights.priority_interconnection =
        static_cast<std::size_t>(scenario.priority_interconnection);
    weights.dp = scenario.weight_dp;
    if (dir == SweepDir::Upper) {
      weights.priority_q = scenario.weight_priority_q;
      weights.other_q = scenario.weight_other_q;
    } else {
      weights.priority_q = -scenario.weight_priority_q;
      weights.other_q = -scenario.weight_other_q;
    }
    const double q_thresh =
        dir == SweepDir::Upper ? scenario.q_thresh_pos : scenario.q_thresh_neg;

    bool stopped = false;
    std::string stop_note;
    std::string stop_status;
    for (int k = 1; k <= scenario.k_max; ++k) {
      SampleRecord rec;
      rec.sample = k;
      rec.sweep = dir;
      if (stopped) {
        rec.lp_status = "skipped";
        rec.note = stop_note;
        rec.p_vert = run.samples.back().p_vert;
        rec.q_vert = run.samples.back().q_vert;
        run.samples.push_back(rec);
        continue;
      }

      // bounds for this sample: one p step, remaining reactive budget
      SampleBounds bounds;
      bounds.dp_lower.assign(n, 0.0);
      bounds.dp_upper.assign(n, 0.0);
      bounds.dq_lower.assign(n, 0.0);
      bounds.dq_upper.assign(n, 0.0);
      std::map<int, const NodeFlexibility*> remaining;
      for (const auto& flex : st.work.flexibilities)
        remaining[flex.bus] = &flex;
      for (const auto& step : disc.steps) {
        const auto d = static_cast<std::size_t>(step.bus);
        const NodeFlexibility* rem = remaining.at(step.bus);
        if (step.p_step < 0.0)
          bounds.dp_lower[d] = std::max(step.p_step, rem->delta_p_min);
        else if (step.p_step > 0.0)
          bounds.dp_upper[d] = std::min(step.p_step, rem->delta_p_max);
        bounds.dq_lower[d] = rem->delta_q_min;
        bounds.dq_upper[d] = rem->delta_q_max;
      }

      LinearProgram lp =
          assemble_for_lp(st.bundle, st.work, bounds, weights, q_thresh);
      if (!scenario.relinearize) {
        // frozen bundle: consume headroom by the accumulated predictions
        for (std::size_t i = 0; i < n; ++i) {
          lp.b_ineq[i] -= st.accum_ddelta[i];          // angle_ub
          lp.b_ineq[n + i] += st.accum_ddelta[i];      // angle_lb
          lp.b_ineq[2 * n + i] -= st.accum_dv[i];      // v_ub
          lp.b_ineq[3 * n + i] += st.accum_dv[i];      // v_lb
        }
        std::size_t row = 4 * n;
        for (std::size_t t = 0; t < 2 * b; ++t) {
          if (!st.bundle.current_ok[t]) continue;
          lp.b_ineq[row] -= st.accum_di_rel[t];
          ++row;
        }
      }

      const LpSolution sol = solve_lp(lp, options.simplex);
      if (sol.status != LpStatus::Optimal) {
        stopped = true;
        stop_status = to_string(sol.status);
        stop_note = "sweep stopped at sample " + std::to_string(k) + ": " +
                    stop_status;
        rec.lp_status = stop_status;
        rec.note = sol.message;
        rec.p_vert = run.samples.back().p_vert;
        rec.q_vert = run.samples.back().q_vert;
        run.samples.push_back(rec);
        run.early_stopped = true;
        continue;
      }

      for (std::size_t e = 0; e < ic; ++e) {
        accum_slack_p[e] += sol.x[lp.var_slack_p(e)];
        accum_slack_q[e] += sol.x[lp.var_slack_q(e)];
      }
      rec.lp_status = to_string(sol.status);
      rec.executed = true;
      rec.objective = sol.objective;
      rec.lp_iterations = sol.iterations;
      rec.p_vert.resize(ic);
      rec.q_vert.resize(ic);
      for (std::size_t e = 0; e < ic; ++e) {
        rec.p_vert[e] = base_p_vert[e] + accum_slack_p[e];
        rec.q_vert[e] = base_q_vert[e] + accum_slack_q[e];
      }
      for (const auto& step : disc.steps)
        rec.sum_dq += sol.x[lp.var_dq(static_cast<std::size_t>(step.bus))];

      std::vector<std::string> warnings;
      st.work = update_operating_point(st.work, lp, sol, &warnings);
      for (const auto& w : warnings)
        rec.note += (rec.note.empty() ? "" : "; ") + w;

      if (scenario.relinearize) {
        const AdmittanceMatrix ybus = build_admittance(st.work);
        const PowerFlowSolution pf =
            solve_newton_raphson(st.work, ybus, options.newton);
        if (!pf.report.converged) {
          stopped = true;
          stop_status = "nr_divergence";
          stop_note = "sweep stopped at sample " + std::to_string(k) +
                      ": power flow divergence after update";
          rec.note += (rec.note.empty() ? "" : "; ") + stop_note;
          run.early_stopped = true;
          run.samples.push_back(rec);
          continue;
        }
        st.bundle =
            build_sensitivity_bundle(st.work, ybus, pf, options.sensitivity);
      } else {
        for (std::size_t i = 0; i < n; ++i) {
          st.accum_ddelta[i] += sol.x[lp.var_ddelta(i)];
          st.accum_dv[i] += sol.x[lp.var_dv(i)];
        }
        for (std::size_t t = 0; t < 2 * b; ++t) {
          if (!st.bundle.current_ok[t]) continue;
          double di = 0.0;
          for (std::size_t j = 0; j < n; ++j)
            di += st.bundle.id_tb(t, j) * sol.x[lp.var_ddelta(j)] +
                  st.bundle.iu_tb(t, j) * sol.x[lp.var_dv(j)];
          st.accum_di_rel[t] += di;
        }
      }
      run.samples.push_back(rec);
    }
  };

  run_sweep(SweepDir::Upper);
  run_sweep(SweepDir::Lower);
  run.boundaries = extract_boundaries(run);
  return run;
}

std::vector<FORBoundary> extract_boundaries(const AggregationRun& run) {
  const std::size_t ic = run.base_case.interconnections.size();
  std::vector<FORBoundary> out(ic);
  for (std::size_t e = 0; e < ic; ++e) {
    FORBoundary& boundary = out[e];
    boundary.interconnection = static_cast<int>(e);
    boundary.scenario = run.scenario.name;
    boundary.q_thresh_pos = run.scenario.q_thresh_pos;
    boundary.q_thresh_neg = run.scenario.q_thresh_neg;
    for (const auto& rec : run.samples) {
      auto& trace = rec.sweep == SweepDir::Upper ? boundary.upper : boundary.lower;
      trace.emplace_back(rec.p_vert[e], rec.q_vert[e]);
    }
  }
  return out;
}

double polygon_area(const FORBoundary& boundary) {
  // closed ring: upper trace forward, lower trace backward, joined at the
  // base point and the final sample
  std::vector<std::pair<double, double>> ring = boundary.upper;
  for (std::size_t i = boundary.lower.size(); i-- > 1;)
    ring.push_back(boundary.lower[i]);
  double twice_area = 0.0;
  const std::size_t n = ring.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& [x1, y1] = ring[i];
    const auto& [x2, y2] = ring[(i + 1) % n];
    twice_area += x1 * y2 - x2 * y1;
  }
  return 0.5 * std::abs(twice_area);
}

}  // namespace gridflex
