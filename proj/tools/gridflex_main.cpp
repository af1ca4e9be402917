#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "gridflex/for_engine.hpp"
#include "gridflex/grid_model.hpp"
#include "gridflex/lp.hpp"
#include "gridflex/manifest.hpp"
#include "gridflex/powerflow.hpp"
#include "gridflex/sensitivity.hpp"
#include "gridflex/validation.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace gridflex;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitNonConvergence = 2;
constexpr int kExitUsage = 64;

struct GlobalOptions {
  std::string out_dir = ".";
  double tolerance = 1e-8;
  long seed = 0;  // reserved
  bool json_logs = false;
};

void log_error(const GlobalOptions& opts, const std::string& msg) {
  if (opts.json_logs) {
    json line{{"level", "error"}, {"msg", msg}};
    std::cerr << line.dump() << '\n';
  } else {
    std::cerr << "gridflex: " << msg << '\n';
  }
}

std::string fmt(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", value);
  return buf;
}

json manifest_json(const RunManifest& manifest) {
  return json::parse(manifest_to_json(manifest));
}

RunManifest make_manifest(const std::string& command,
                          const std::vector<std::string>& inputs,
                          const std::string& options_repr) {
  RunManifest manifest;
  manifest.command = command;
  manifest.inputs = inputs;
  manifest.config_hash = config_hash(command, inputs, options_repr);
  manifest.timestamp = iso8601_utc_now();
  return manifest;
}

json solution_to_json(const PowerFlowSolution& sol) {
  json out;
  out["v"] = sol.v;
  out["delta"] = sol.delta;
  out["p"] = sol.p;
  out["q"] = sol.q;
  json branch_pq = json::array();
  json branch_i = json::array();
  for (std::size_t k = 0; k < sol.branch_p.size(); ++k) {
    branch_pq.push_back({{"p_from", sol.branch_p[k][0]},
                         {"q_from", sol.branch_q[k][0]},
                         {"p_to", sol.branch_p[k][1]},
                         {"q_to", sol.branch_q[k][1]}});
    branch_i.push_back(
        {{"from", sol.branch_i[k][0]}, {"to", sol.branch_i[k][1]}});
  }
  out["branch_pq"] = std::move(branch_pq);
  out["branch_i"] = std::move(branch_i);
  out["report"] = {{"iterations", sol.report.iterations},
                   {"final_mismatch", sol.report.final_mismatch},
                   {"converged", sol.report.converged}};
  return out;
}

int cmd_pf(const GlobalOptions& opts, const std::string& case_path) {
  const GridCase grid = load_grid_case_file(case_path);
  NewtonOptions newton;
  newton.tolerance = opts.tolerance;
  const PowerFlowSolution sol = solve_newton_raphson(grid, newton);

  json out = solution_to_json(sol);
  out["manifest"] =
      manifest_json(make_manifest("pf", {case_path},
                                  "tolerance=" + fmt(opts.tolerance)));
  std::cout << out.dump(2) << '\n';
  return sol.report.converged ? kExitOk : kExitNonConvergence;
}

int cmd_case_check(const GlobalOptions& opts, const std::string& case_path) {
  try {
    const GridCase grid = load_grid_case_file(case_path);
    const auto diags = validate_case(grid);
    for (const auto& d : diags) std::cout << d << '\n';
    if (diags.empty()) std::cout << "ok: " << case_path << '\n';
    return diags.empty() ? kExitOk : kExitInput;
  } catch (const ValidationError& e) {
    for (const auto& d : e.diagnostics) std::cout << d << '\n';
    return kExitInput;
  } catch (const ParseError& e) {
    log_error(opts, e.what());
    return kExitInput;
  }
}

void write_matrix_csv(const fs::path& path, const Matrix& m,
                      const std::vector<std::string>& row_labels,
                      const std::string& col_prefix) {
  std::ofstream out(path);
  out << "row";
  for (std::size_t j = 0; j < m.cols(); ++j) out << ',' << col_prefix << j;
  out << '\n';
  for (std::size_t i = 0; i < m.rows(); ++i) {
    out << row_labels[i];
    for (std::size_t j = 0; j < m.cols(); ++j) out << ',' << fmt(m(i, j));
    out << '\n';
  }
}

int cmd_ptdf(const GlobalOptions& opts, const std::string& case_path) {
  const GridCase grid = load_grid_case_file(case_path);
  NewtonOptions newton;
  newton.tolerance = opts.tolerance;
  const AdmittanceMatrix ybus = build_admittance(grid);
  const PowerFlowSolution sol = solve_newton_raphson(grid, ybus, newton);
  if (!sol.report.converged) {
    log_error(opts, "power flow did not converge; no sensitivities");
    return kExitNonConvergence;
  }
  const SensitivityBundle bundle = build_sensitivity_bundle(grid, ybus, sol);

  const std::size_t b = grid.branch_count();
  std::vector<std::string> pq_labels(2 * b), i_labels(2 * b);
  for (std::size_t k = 0; k < b; ++k) {
    pq_labels[k] = "p[" + std::to_string(k) + "]";
    pq_labels[b + k] = "q[" + std::to_string(k) + "]";
    i_labels[k] = "i[" + std::to_string(k) + ":from]";
    i_labels[b + k] = "i[" + std::to_string(k) + ":to]";
  }

  fs::create_directories(opts.out_dir);
  const fs::path dir(opts.out_dir);
  write_matrix_csv(dir / "pq_t_p.csv", bundle.pq_t_p, pq_labels, "bus");
  write_matrix_csv(dir / "pq_t_q.csv", bundle.pq_t_q, pq_labels, "bus");
  write_matrix_csv(dir / "id_tb.csv", bundle.id_tb, i_labels, "bus");
  write_matrix_csv(dir / "iu_tb.csv", bundle.iu_tb, i_labels, "bus");

  RunManifest manifest = make_manifest("ptdf", {case_path},
                                       "tolerance=" + fmt(opts.tolerance));
  manifest.outputs = {(dir / "pq_t_p.csv").string(),
                      (dir / "pq_t_q.csv").string(),
                      (dir / "id_tb.csv").string(),
                      (dir / "iu_tb.csv").string()};
  std::ofstream mf(dir / "ptdf_manifest.json");
  mf << manifest_to_json(manifest) << '\n';
  return kExitOk;
}

int resolve_branch_flag(const GridCase& grid, const std::string& flag) {
  if (flag.rfind("ic", 0) == 0) {
    const int ordinal = std::stoi(flag.substr(2));
    if (ordinal < 1 ||
        ordinal > static_cast<int>(grid.interconnections.size()))
      throw ValidationError({"no interconnection '" + flag + "'"});
    return grid.interconnections[static_cast<std::size_t>(ordinal - 1)];
  }
  const int idx = std::stoi(flag);
  if (idx < 0 || idx >= static_cast<int>(grid.branch_count()))
    throw ValidationError({"branch index " + flag + " out of range"});
  return idx;
}

int cmd_validate(const GlobalOptions& opts, const std::string& case_path,
                 const std::string& branch_flag, int bus,
                 const std::string& type, int points, double max_magnitude) {
  const GridCase grid = load_grid_case_file(case_path);
  const int branch = resolve_branch_flag(grid, branch_flag);

  std::vector<double> magnitudes{0.0};
  const double lo = std::log10(1e-3), hi = std::log10(max_magnitude);
  for (int i = 0; i < points - 1; ++i)
    magnitudes.push_back(
        std::pow(10.0, lo + (hi - lo) * i / std::max(points - 2, 1)));

  const DeviationSweep sweep =
      ptdf_deviation_sweep(grid, branch, bus, type[0], magnitudes);

  fs::create_directories(opts.out_dir);
  const fs::path csv_path = fs::path(opts.out_dir) / "deviation_sweep.csv";
  std::ofstream out(csv_path);
  out << "magnitude_pu,q_predicted_pu,q_true_pu,deviation\n";
  for (std::size_t i = 0; i < sweep.magnitudes.size(); ++i) {
    out << fmt(sweep.magnitudes[i]) << ',' << fmt(sweep.q_predicted[i]) << ','
        << fmt(sweep.q_true[i]) << ',' << fmt(sweep.deviations[i]) << '\n';
  }

  RunManifest manifest = make_manifest(
      "validate", {case_path},
      "branch=" + branch_flag + ";bus=" + std::to_string(bus) +
          ";type=" + type + ";points=" + std::to_string(points) +
          ";max_magnitude=" + fmt(max_magnitude));
  manifest.outputs = {csv_path.string()};
  std::ofstream mf(fs::path(opts.out_dir) / "validate_manifest.json");
  mf << manifest_to_json(manifest) << '\n';
  return kExitOk;
}

int cmd_for(const GlobalOptions& opts, const std::string& case_path,
            const std::vector<std::string>& scenario_paths) {
  const GridCase grid = load_grid_case_file(case_path);
  const double s_base = grid.base_power;

  // validate all scenario files up front so a bad reference fails the run
  std::vector<Scenario> scenarios;
  for (const auto& path : scenario_paths)
    scenarios.push_back(load_scenario_file(path, grid));

  fs::create_directories(opts.out_dir);
  const fs::path dir(opts.out_dir);

  std::vector<std::string> messages(scenarios.size());
#pragma omp parallel for schedule(dynamic)
  for (long s = 0; s < static_cast<long>(scenarios.size()); ++s) {
    const Scenario& scenario = scenarios[static_cast<std::size_t>(s)];
    RunOptions run_opts;
    run_opts.newton.tolerance = opts.tolerance;
    const AggregationRun run = run_for_determination(grid, scenario, run_opts);

    std::vector<std::string> outputs;
    for (std::size_t e = 0; e < run.boundaries.size(); ++e) {
      const fs::path csv_path =
          dir / (scenario.name + "_ic" + std::to_string(e + 1) + ".csv");
      std::ofstream out(csv_path);
      out << "sample,sweep,p_vert_mw,q_vert_mvar,lp_status\n";
      for (const auto& rec : run.samples) {
        out << rec.sample << ',' << to_string(rec.sweep) << ','
            << fmt(rec.p_vert[e] * s_base) << ','
            << fmt(rec.q_vert[e] * s_base) << ',' << rec.lp_status << '\n';
      }
      outputs.push_back(csv_path.string());
    }

    json summary;
    RunManifest manifest = make_manifest(
        "for", {case_path, scenario_paths[static_cast<std::size_t>(s)]},
        "tolerance=" + fmt(opts.tolerance));
    manifest.outputs = outputs;
    summary["manifest"] = manifest_json(manifest);
    summary["scenario"] = {{"name", scenario.name},
                           {"priority_interconnection",
                            scenario.priority_interconnection},
                           {"q_thresh_pos_mvar", scenario.q_thresh_pos * s_base},
                           {"q_thresh_neg_mvar", scenario.q_thresh_neg * s_base},
                           {"k_max", scenario.k_max},
                           {"relinearize", scenario.relinearize}};
    summary["pivot_rule"] = run.pivot_rule;
    summary["early_stopped"] = run.early_stopped;
    json samples = json::array();
    for (const auto& rec : run.samples) {
      json jr{{"sample", rec.sample},
              {"sweep", to_string(rec.sweep)},
              {"lp_status", rec.lp_status},
              {"objective", rec.objective},
              {"sum_dq_mvar", rec.sum_dq * s_base},
              {"lp_iterations", rec.lp_iterations}};
      if (!rec.note.empty()) jr["note"] = rec.note;
      json pv = json::array(), qv = json::array();
      for (double value : rec.p_vert) pv.push_back(value * s_base);
      for (double value : rec.q_vert) qv.push_back(value * s_base);
      jr["p_vert_mw"] = std::move(pv);
      jr["q_vert_mvar"] = std::move(qv);
      samples.push_back(std::move(jr));
    }
    summary["samples"] = std::move(samples);
    const fs::path summary_path = dir / (scenario.name + "_summary.json");
    std::ofstream sf(summary_path);
    sf << summary.dump(2) << '\n';

    messages[static_cast<std::size_t>(s)] =
        scenario.name + ": " + std::to_string(run.boundaries.size()) +
        " boundary files" + (run.early_stopped ? " (early-stopped)" : "");
  }
  for (const auto& msg : messages) std::cout << msg << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PQ-flexibility aggregation at HV-EHV interconnections"};
  app.require_subcommand(1);

  GlobalOptions opts;
  app.add_option("--out-dir", opts.out_dir, "Output directory");
  app.add_option("--tolerance", opts.tolerance, "Power flow tolerance (p.u.)");
  app.add_option("--seed", opts.seed, "Reserved");
  app.add_flag("--json-logs", opts.json_logs, "JSON log lines on stderr");

  std::string case_path;
  std::vector<std::string> scenario_paths;
  std::string branch_flag = "ic1", type = "q";
  int bus = 0, points = 20;
  double max_magnitude = 0.1;

  auto* pf = app.add_subcommand("pf", "Solve the AC power flow");
  pf->add_option("case", case_path, "Grid case JSON")->required();

  auto* ptdf = app.add_subcommand("ptdf", "Dump injection-based sensitivities");
  ptdf->add_option("case", case_path, "Grid case JSON")->required();

  auto* forcmd = app.add_subcommand("for", "Sweep feasible operating regions");
  forcmd->add_option("case", case_path, "Grid case JSON")->required();
  forcmd->add_option("scenarios", scenario_paths, "Scenario JSON file(s)")
      ->required();

  auto* validate = app.add_subcommand("validate", "PTDF deviation sweep");
  validate->add_option("case", case_path, "Grid case JSON")->required();
  validate->add_option("--branch", branch_flag,
                       "Interconnection label (icN) or branch index");
  validate->add_option("--bus", bus, "Injection bus")->required();
  validate->add_option("--type", type, "Injection type")
      ->check(CLI::IsMember({"p", "q"}));
  validate->add_option("--points", points, "Sweep point count");
  validate->add_option("--max-magnitude", max_magnitude,
                       "Largest perturbation (p.u.)");

  auto* check = app.add_subcommand("case-check", "Validate a grid case file");
  check->add_option("case", case_path, "Grid case JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (pf->parsed()) return cmd_pf(opts, case_path);
    if (ptdf->parsed()) return cmd_ptdf(opts, case_path);
    if (forcmd->parsed()) return cmd_for(opts, case_path, scenario_paths);
    if (validate->parsed())
      return cmd_validate(opts, case_path, branch_flag, bus, type, points,
                          max_magnitude);
    if (check->parsed()) return cmd_case_check(opts, case_path);
  } catch (const ValidationError& e) {
    for (const auto& d : e.diagnostics) log_error(opts, d);
    return kExitInput;
  } catch (const ParseError& e) {
    log_error(opts, e.what());
    return kExitInput;
  } catch (const SingularMatrixError& e) {
    log_error(opts, e.what());
    return kExitNonConvergence;
  } catch (const IllConditionedError& e) {
    log_error(opts, e.what());
    return kExitNonConvergence;
  } catch (const std::exception& e) {
    log_error(opts, e.what());
    return kExitInput;
  }
  return kExitUsage;
}
