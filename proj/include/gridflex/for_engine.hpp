#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gridflex/grid_model.hpp"
#include "gridflex/lp.hpp"
#include "gridflex/powerflow.hpp"
#include "gridflex/sensitivity.hpp"

namespace gridflex {

/// One prioritization study: which interconnection's reactive transfer the
/// objective maximizes, and the sweep thresholds. Weights are given for the
/// max-positive sweep; the max-negative sweep mirrors the q weights.
struct Scenario {
  std::string name;
  int priority_interconnection = 0;
  double weight_priority_q = -1.0;
  double weight_other_q = 0.1;
  double weight_dp = -1.0;
  double q_thresh_pos = 0.0;  // p.u., > 0
  double q_thresh_neg = 0.0;  // p.u., < 0
  int k_max = 10;
  bool relinearize = true;
};

/// Parse the scenario JSON (thresholds arrive in Mvar); validated against
/// the case it will drive.
Scenario load_scenario(const std::string& text, const GridCase& grid);
Scenario load_scenario_file(const std::string& path, const GridCase& grid);

/// Componentwise sum of deviation boxes at one bus (Minkowski sum of
/// axis-aligned rectangles). Throws on an empty list or mixed bus indices.
NodeFlexibility aggregate_rectangular_flexibilities(
    std::span<const NodeFlexibility> envelopes);

struct FlexStep {
  int bus = 0;
  double p_step = 0.0;          // p.u. per sample, down-regulation <= 0
  double dq_min = 0.0, dq_max = 0.0;  // per-step reactive range (rectangle)
};

struct FlexDiscretization {
  int k_max = 1;
  std::vector<FlexStep> steps;  // one per flexibility bus
};

/// Step size = down-regulation budget / k_max; the rectangular envelope's
/// reactive range carries through unchanged per step.
FlexStep discretize_flexibility(const NodeFlexibility& flex, int k_max);
FlexDiscretization discretize_case_flexibilities(const GridCase& grid,
                                                 int k_max);

enum class SweepDir { Upper, Lower };
const char* to_string(SweepDir dir);

struct SampleRecord {
  int sample = 0;  // 0 = base point
  SweepDir sweep = SweepDir::Upper;
  std::string lp_status;  // "base", "optimal", "infeasible", ..., "skipped"
  bool executed = false;
  std::vector<double> p_vert, q_vert;  // per interconnection, p.u.
  double objective = 0.0;
  double sum_dq = 0.0;  // sampled reactive total, equals the active threshold
  int lp_iterations = 0;
  std::string note;
};

struct FORBoundary {
  int interconnection = 0;  // position within case.interconnections
  std::string scenario;
  double q_thresh_pos = 0.0, q_thresh_neg = 0.0;
  std::vector<std::pair<double, double>> upper, lower;  // (p_vert, q_vert)
};

struct AggregationRun {
  GridCase base_case;
  Scenario scenario;
  std::vector<SampleRecord> samples;  // upper 0..k_max then lower 0..k_max
  std::vector<FORBoundary> boundaries;
  std::string pivot_rule = "dantzig-lowest-index/bland-fallback";
  bool early_stopped = false;
};

struct RunOptions {
  NewtonOptions newton;
  SimplexOptions simplex;
  SensitivityOptions sensitivity;
};

/// Apply the solved deviations: shift injections at flexibility buses,
/// reduce the remaining budgets. Budget sign violations are clamped to zero
/// with a warning appended.
GridCase update_operating_point(const GridCase& grid, const LinearProgram& lp,
                                const LpSolution& solution,
                                std::vector<std::string>* warnings = nullptr);

/// The two-loop sweep: per sample set bounds from the discretization, tilt
/// the objective toward the prioritized interconnection, solve the LP under
/// the active reactive threshold, apply the deviations and (by default)
/// re-linearize at the new operating point.
AggregationRun run_for_determination(const GridCase& grid,
                                     const Scenario& scenario,
                                     const RunOptions& options = {});

/// Ordered boundary traces per interconnection, closed at the base point.
std::vector<FORBoundary> extract_boundaries(const AggregationRun& run);

/// Shoelace area of the closed upper+lower trace polygon.
double polygon_area(const FORBoundary& boundary);

}  // namespace gridflex
