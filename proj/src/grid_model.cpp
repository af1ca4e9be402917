#include "gridflex/grid_model.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace gridflex {

using nlohmann::json;

namespace {

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += "; ";
    out += p;
  }
  return out;
}

double require_number(const json& obj, const char* key,
                      const std::string& context) {
  if (!obj.contains(key))
    throw ParseError(context + ": missing field '" + key + "'");
  if (!obj.at(key).is_number())
    throw ParseError(context + ": field '" + key + "' is not a number");
  return obj.at(key).get<double>();
}

double optional_number(const json& obj, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  return obj.at(key).get<double>();
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> diags)
    : std::runtime_error(join(diags)), diagnostics(std::move(diags)) {}

GridCase load_grid_case(const std::string& source) {
  json doc;
  try {
    doc = json::parse(source);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("top level is not an object");

  GridCase grid;
  grid.base_power = require_number(doc, "base_power_mva", "case");
  if (grid.base_power <= 0.0) throw ParseError("base_power_mva must be > 0");
  const double s_base = grid.base_power;

  if (!doc.contains("buses") || !doc.at("buses").is_array())
    throw ParseError("case: missing 'buses' array");
  int slack_seen = -1;
  for (const auto& jb : doc.at("buses")) {
    Bus bus;
    bus.index = static_cast<int>(require_number(jb, "index", "bus"));
    const std::string ctx = "bus " + std::to_string(bus.index);
    if (!jb.contains("kind") || !jb.at("kind").is_string())
      throw ParseError(ctx + ": missing 'kind'");
    const std::string kind = jb.at("kind").get<std::string>();
    if (kind == "slack") {
      bus.kind = BusKind::Slack;
      slack_seen = bus.index;
    } else if (kind == "load") {
      bus.kind = BusKind::Load;
    } else {
      throw ParseError(ctx + ": unknown kind '" + kind + "'");
    }
    bus.p_inj = require_number(jb, "p_mw", ctx) / s_base;
    bus.q_inj = require_number(jb, "q_mvar", ctx) / s_base;
    bus.shunt_admittance = {optional_number(jb, "shunt_g_pu", 0.0),
                            optional_number(jb, "shunt_b_pu", 0.0)};
    grid.buses.push_back(bus);
  }
  grid.slack_bus = slack_seen;

  if (!doc.contains("branches") || !doc.at("branches").is_array())
    throw ParseError("case: missing 'branches' array");
  for (const auto& jb : doc.at("branches")) {
    Branch br;
    const std::string ctx = "branch " + std::to_string(grid.branches.size());
    br.from_bus = static_cast<int>(require_number(jb, "from", ctx));
    br.to_bus = static_cast<int>(require_number(jb, "to", ctx));
    br.series_impedance = {require_number(jb, "r_pu", ctx),
                           require_number(jb, "x_pu", ctx)};
    br.total_shunt_admittance = {0.0, optional_number(jb, "b_shunt_pu", 0.0)};
    br.thermal_current_limit = require_number(jb, "i_max_pu", ctx);
    grid.branches.push_back(br);
  }

  if (doc.contains("interconnections")) {
    if (!doc.at("interconnections").is_array())
      throw ParseError("case: 'interconnections' is not an array");
    for (const auto& ji : doc.at("interconnections"))
      grid.interconnections.push_back(ji.get<int>());
  }

  if (doc.contains("flexibilities")) {
    for (const auto& jf : doc.at("flexibilities")) {
      NodeFlexibility flex;
      flex.bus = static_cast<int>(require_number(jf, "bus", "flexibility"));
      const std::string ctx = "flexibility at bus " + std::to_string(flex.bus);
      flex.delta_p_min = require_number(jf, "dp_min_mw", ctx) / s_base;
      flex.delta_p_max = require_number(jf, "dp_max_mw", ctx) / s_base;
      flex.delta_q_min = require_number(jf, "dq_min_mvar", ctx) / s_base;
      flex.delta_q_max = require_number(jf, "dq_max_mvar", ctx) / s_base;
      grid.flexibilities.push_back(flex);
    }
  }

  if (!doc.contains("limits") || !doc.at("limits").is_object())
    throw ParseError("case: missing 'limits' object");
  const json& jl = doc.at("limits");
  const std::size_t n = grid.buses.size();
  grid.limits.v_min.assign(n, require_number(jl, "v_min_pu", "limits"));
  grid.limits.v_max.assign(n, require_number(jl, "v_max_pu", "limits"));
  grid.limits.delta_min.assign(n, require_number(jl, "delta_min_rad", "limits"));
  grid.limits.delta_max.assign(n, require_number(jl, "delta_max_rad", "limits"));

  auto diags = validate_case(grid);
  if (!diags.empty()) throw ValidationError(std::move(diags));
  return grid;
}

GridCase load_grid_case_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("file not found: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return load_grid_case(buf.str());
}

std::string serialize_grid_case(const GridCase& grid) {
  json doc;
  doc["base_power_mva"] = grid.base_power;
  const double s_base = grid.base_power;
  json buses = json::array();
  for (const auto& bus : grid.buses) {
    buses.push_back({{"index", bus.index},
                     {"kind", bus.kind == BusKind::Slack ? "slack" : "load"},
                     {"p_mw", bus.p_inj * s_base},
                     {"q_mvar", bus.q_inj * s_base},
                     {"shunt_g_pu", bus.shunt_admittance.real()},
                     {"shunt_b_pu", bus.shunt_admittance.imag()}});
  }
  doc["buses"] = std::move(buses);
  json branches = json::array();
  for (const auto& br : grid.branches) {
    branches.push_back({{"from", br.from_bus},
                        {"to", br.to_bus},
                        {"r_pu", br.series_impedance.real()},
                        {"x_pu", br.series_impedance.imag()},
                        {"b_shunt_pu", br.total_shunt_admittance.imag()},
                        {"i_max_pu", br.thermal_current_limit}});
  }
  doc["branches"] = std::move(branches);
  doc["interconnections"] = grid.interconnections;
  json flex = json::array();
  for (const auto& f : grid.flexibilities) {
    flex.push_back({{"bus", f.bus},
                    {"dp_min_mw", f.delta_p_min * s_base},
                    {"dp_max_mw", f.delta_p_max * s_base},
                    {"dq_min_mvar", f.delta_q_min * s_base},
                    {"dq_max_mvar", f.delta_q_max * s_base}});
  }
  doc["flexibilities"] = std::move(flex);
  doc["limits"] = {{"v_min_pu", grid.limits.v_min.empty() ? 0.9 : grid.limits.v_min[0]},
                   {"v_max_pu", grid.limits.v_max.empty() ? 1.1 : grid.limits.v_max[0]},
                   {"delta_min_rad", grid.limits.delta_min.empty() ? -1.6 : grid.limits.delta_min[0]},
                   {"delta_max_rad", grid.limits.delta_max.empty() ? 1.6 : grid.limits.delta_max[0]}};
  return doc.dump(2);
}

std::vector<std::string> validate_case(const GridCase& grid) {
  std::vector<std::string> diags;
  const int n = static_cast<int>(grid.buses.size());

  int slack_count = 0;
  for (int i = 0; i < n; ++i) {
    const Bus& bus = grid.buses[i];
    if (bus.index != i)
      diags.push_back("bus at position " + std::to_string(i) +
                      " has non-contiguous index " + std::to_string(bus.index));
    if (bus.kind == BusKind::Slack) ++slack_count;
  }
  if (slack_count == 0) diags.push_back("no slack bus");
  if (slack_count > 1)
    diags.push_back("multiple slack buses (" + std::to_string(slack_count) + ")");

  for (std::size_t b = 0; b < grid.branches.size(); ++b) {
    const Branch& br = grid.branches[b];
    const std::string name = "branch " + std::to_string(b);
    if (br.from_bus < 0 || br.from_bus >= n)
      diags.push_back(name + ": from_bus " + std::to_string(br.from_bus) +
                      " is not a valid bus index");
    if (br.to_bus < 0 || br.to_bus >= n)
      diags.push_back(name + ": to_bus " + std::to_string(br.to_bus) +
                      " is not a valid bus index");
    if (br.from_bus == br.to_bus)
      diags.push_back(name + ": from_bus equals to_bus (" +
                      std::to_string(br.from_bus) + ")");
    if (std::abs(br.series_impedance) <= 0.0)
      diags.push_back(name + ": series impedance is zero");
    if (br.thermal_current_limit <= 0.0)
      diags.push_back(name + ": thermal current limit must be > 0");
  }

  if (grid.interconnections.empty())
    diags.push_back("no interconnections listed");
  std::set<int> seen_ic;
  for (int ic : grid.interconnections) {
    if (ic < 0 || ic >= static_cast<int>(grid.branches.size()))
      diags.push_back("interconnection refers to invalid branch index " +
                      std::to_string(ic));
    else if (!seen_ic.insert(ic).second)
      diags.push_back("duplicate interconnection branch index " +
                      std::to_string(ic));
  }

  for (const auto& flex : grid.flexibilities) {
    const std::string name = "flexibility at bus " + std::to_string(flex.bus);
    if (flex.bus < 0 || flex.bus >= n)
      diags.push_back(name + ": invalid bus index");
    if (flex.delta_p_min > 0.0 || flex.delta_p_max < 0.0 ||
        flex.delta_q_min > 0.0 || flex.delta_q_max < 0.0)
      diags.push_back(name + ": zero deviation infeasible (bounds must "
                      "bracket zero)");
  }

  const auto expect_len = [&](const std::vector<double>& v, const char* what) {
    if (v.size() != static_cast<std::size_t>(n))
      diags.push_back(std::string("limits: ") + what + " has length " +
                      std::to_string(v.size()) + ", expected " +
                      std::to_string(n));
  };
  expect_len(grid.limits.v_min, "v_min");
  expect_len(grid.limits.v_max, "v_max");
  expect_len(grid.limits.delta_min, "delta_min");
  expect_len(grid.limits.delta_max, "delta_max");
  for (std::size_t i = 0; i < grid.limits.v_min.size() &&
                          i < grid.limits.v_max.size(); ++i) {
    if (grid.limits.v_min[i] >= grid.limits.v_max[i])
      diags.push_back("limits: v_min >= v_max at bus " + std::to_string(i));
  }

  return diags;
}

AdmittanceMatrix build_admittance(const GridCase& grid) {
  const std::size_t n = grid.bus_count();
  AdmittanceMatrix ybus;
  ybus.n = n;
  ybus.y.assign(n * n, {0.0, 0.0});

  for (const auto& br : grid.branches) {
    const auto i = static_cast<std::size_t>(br.from_bus);
    const auto j = static_cast<std::size_t>(br.to_bus);
    const std::complex<double> y_series = 1.0 / br.series_impedance;
    const std::complex<double> y_half = 0.5 * br.total_shunt_admittance;
    ybus.y[i * n + i] += y_series + y_half;
    ybus.y[j * n + j] += y_series + y_half;
    ybus.y[i * n + j] -= y_series;
    ybus.y[j * n + i] -= y_series;
  }
  for (const auto& bus : grid.buses) {
    const auto i = static_cast<std::size_t>(bus.index);
    ybus.y[i * n + i] += bus.shunt_admittance;
  }

  ybus.magnitude_.resize(n * n);
  ybus.phase_.resize(n * n);
  for (std::size_t k = 0; k < n * n; ++k) {
    ybus.magnitude_[k] = std::abs(ybus.y[k]);
    ybus.phase_[k] = ybus.magnitude_[k] > 0.0 ? std::arg(ybus.y[k]) : 0.0;
  }
  return ybus;
}

}  // namespace gridflex
