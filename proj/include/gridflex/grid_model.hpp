#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace gridflex {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ValidationError : std::runtime_error {
  explicit ValidationError(std::vector<std::string> diags);
  std::vector<std::string> diagnostics;
};

enum class BusKind { Slack, Load };

/// Injections are generation-positive: loads carry negative p_inj/q_inj.
struct Bus {
  int index = 0;
  BusKind kind = BusKind::Load;
  double p_inj = 0.0;  // p.u.
  double q_inj = 0.0;  // p.u.
  std::complex<double> shunt_admittance{0.0, 0.0};  // p.u.
};

struct Branch {
  int from_bus = 0;
  int to_bus = 0;
  std::complex<double> series_impedance{0.0, 0.0};        // p.u., nonzero
  std::complex<double> total_shunt_admittance{0.0, 0.0};  // p.u., half per end
  double thermal_current_limit = 0.0;                     // p.u. magnitude
};

/// Admissible injection deviation box at one bus; zero deviation is always
/// inside.
struct NodeFlexibility {
  int bus = 0;
  double delta_p_min = 0.0, delta_p_max = 0.0;  // p.u.
  double delta_q_min = 0.0, delta_q_max = 0.0;  // p.u.
};

struct OperatingLimits {
  std::vector<double> v_min, v_max;          // p.u., length n
  std::vector<double> delta_min, delta_max;  // rad, length n
};

/// A complete problem instance: network, operating point, interconnections
/// and per-node flexibility envelopes, all in per-unit on base_power.
struct GridCase {
  double base_power = 100.0;  // MVA
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  int slack_bus = 0;
  std::vector<int> interconnections;  // branch indices, HV side = from
  std::vector<NodeFlexibility> flexibilities;
  OperatingLimits limits;

  std::size_t bus_count() const { return buses.size(); }
  std::size_t branch_count() const { return branches.size(); }
};

/// Dense bus admittance matrix with cached polar views.
struct AdmittanceMatrix {
  std::size_t n = 0;
  std::vector<std::complex<double>> y;  // n*n row-major
  std::vector<double> magnitude_;       // |Y_ij|
  std::vector<double> phase_;           // arg(Y_ij), 0 for zero entries

  std::complex<double> at(std::size_t i, std::size_t j) const {
    return y[i * n + j];
  }
  double magnitude(std::size_t i, std::size_t j) const {
    return magnitude_[i * n + j];
  }
  double phase(std::size_t i, std::size_t j) const {
    return phase_[i * n + j];
  }
};

/// Parse the grid JSON format; quantities arrive in MW/Mvar and leave in
/// per-unit on base_power_mva. Schema violations raise ParseError, invariant
/// violations ValidationError.
GridCase load_grid_case(const std::string& source);
GridCase load_grid_case_file(const std::string& path);

/// Inverse of load_grid_case, emitting the same JSON schema.
std::string serialize_grid_case(const GridCase& grid);

/// Empty iff all GridCase invariants hold; one diagnostic per violation.
std::vector<std::string> validate_case(const GridCase& grid);

AdmittanceMatrix build_admittance(const GridCase& grid);

}  // namespace gridflex
