#include "mumanifold/serialize.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "mumanifold/errors.hpp"

namespace mumanifold {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

namespace {

json pair_json(const std::pair<double, double>& p) { return json::array({p.first, p.second}); }

json state_json(const PlanarState& v) { return json::array({v(0), v(1)}); }

json sample_json(const PerturbationSample& s) {
  return json{{"t", s.t}, {"u", state_json(s.u)}, {"v", state_json(s.v)}, {"ratio", s.ratio}};
}

// Non-finite values have no JSON literal; they are written as strings.
json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double read_double(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw ConfigError(std::string("missing or non-numeric field '") + key + "'");
  }
  return j.at(key).get<double>();
}

std::size_t read_size(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number_unsigned()) {
    throw ConfigError(std::string("missing or invalid count '") + key + "'");
  }
  return j.at(key).get<std::size_t>();
}

TimeGrid time_grid_from_json(const json& j) {
  TimeGrid g{read_double(j, "start"), read_double(j, "step"), read_size(j, "count")};
  if (!(g.step > 0.0) || g.count == 0) throw ConfigError("invalid time grid metadata");
  return g;
}

XiGrid xi_grid_from_json(const json& j) {
  XiGrid g{read_double(j, "step"), read_size(j, "half")};
  if (!(g.step > 0.0)) throw ConfigError("invalid xi grid metadata");
  return g;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, std::size_t rows, std::size_t cols) {
  if (!j.is_array() || j.size() != rows) throw ConfigError("value rows do not match the grid");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    const json& row = j[i];
    if (!row.is_array() || row.size() != cols) {
      throw ConfigError("value columns do not match the grid");
    }
    for (std::size_t k = 0; k < cols; ++k) {
      if (!row[k].is_number()) throw ConfigError("non-numeric entry in values");
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = row[k].get<double>();
    }
  }
  return m;
}

}  // namespace

void to_json(json& j, const GrowthValidation& v) {
  j = json{{"passed", v.passed()},
           {"at_least_one", v.at_least_one},
           {"monotone", v.monotone},
           {"positive_derivative", v.positive_derivative},
           {"derivative_consistent", v.derivative_consistent},
           {"divergent", v.divergent},
           {"max_derivative_rel_error", number(v.max_derivative_rel_error)},
           {"first_violation_time", v.first_violation_time}};
}

void to_json(json& j, const DichotomySpec& v) {
  j = json{{"D", v.D}, {"a", v.a}, {"b", v.b}, {"eps", v.eps}};
}

void to_json(json& j, const PairGrid& v) {
  j = json{{"t0", v.t0}, {"t1", v.t1}, {"step", v.step}, {"nodes", v.times.size()},
           {"pairs", v.pair_count()}};
}

void to_json(json& j, const DichotomyReport& v) {
  json nonfinite = json::array();
  for (const auto& p : v.nonfinite_pairs) nonfinite.push_back(pair_json(p));
  j = json{{"pass", v.pass},
           {"degenerate", v.degenerate},
           {"D_min_U", number(v.D_min_U)},
           {"D_min_V", number(v.D_min_V)},
           {"worst_pair_U", pair_json(v.worst_pair_U)},
           {"worst_pair_V", pair_json(v.worst_pair_V)},
           {"nonfinite_pairs", nonfinite},
           {"spec", v.spec},
           {"grid", v.grid}};
}

void to_json(json& j, const WitnessEntry& v) {
  j = json{{"k", v.k}, {"t", v.t}, {"s", v.s}, {"ratio", v.ratio}, {"mu_s_pow_eps", v.mu_s_pow_eps}};
}

void to_json(json& j, const PerturbationReport& v) {
  j = json{{"pass", v.pass},
           {"origin_value", number(v.origin_value)},
           {"origin_jacobian", number(v.origin_jacobian)},
           {"jacobian_bound", number(v.jacobian_bound)},
           {"lipschitz", number(v.lipschitz)},
           {"jacobian_lipschitz", number(v.jacobian_lipschitz)},
           {"worst_jacobian", sample_json(v.worst_jacobian)},
           {"worst_lipschitz", sample_json(v.worst_lipschitz)},
           {"worst_jacobian_lipschitz", sample_json(v.worst_jacobian_lipschitz)},
           {"failures", v.failures}};
}

void to_json(json& j, const DeltaBounds& v) {
  json bounds = json::object();
  for (const auto& [name, value] : v.named()) bounds[name] = number(value);
  j = json{{"D", v.D},         {"C", v.C},
           {"eps", v.eps},     {"a", v.a},
           {"b", v.b},         {"bounds", bounds},
           {"delta_max", number(v.delta_max)}, {"binding", v.binding}};
}

void to_json(json& j, const TimeGrid& v) {
  j = json{{"start", v.start}, {"step", v.step}, {"count", v.count}};
}

void to_json(json& j, const XiGrid& v) { j = json{{"step", v.step}, {"half", v.half}}; }

void to_json(json& j, const InnerDiagnostics& v) {
  j = json{{"iterations", v.iterations},
           {"ratios", v.ratios},
           {"final_difference", number(v.final_difference)}};
}

void to_json(json& j, const OuterDiagnostics& v) {
  j = json{{"converged", v.converged},
           {"iterations", v.iterations},
           {"differences", v.differences},
           {"ratios", v.ratios},
           {"max_inner_ratio", v.max_inner_ratio},
           {"max_inner_iterations", v.max_inner_iterations},
           {"inner_ratio_bound", number(v.inner_ratio_bound)},
           {"outer_ratio_bound", number(v.outer_ratio_bound)},
           {"tail_bound", number(v.tail_bound)},
           {"quadrature_estimate", number(v.quadrature_estimate)},
           {"residual", number(v.residual)}};
}

void to_json(json& j, const BoundReport& v) {
  j = json{{"pass", v.pass},
           {"skipped", v.skipped},
           {"max_ratio", number(v.max_ratio)},
           {"threshold", number(v.threshold)},
           {"evaluated", v.evaluated},
           {"worst", {{"t", v.worst_t}, {"s", v.worst_s}, {"xi", v.worst_xi},
                      {"xi_bar", v.worst_xi_bar}}},
           {"note", v.note}};
}

void to_json(json& j, const TrajectoryClassReport& v) {
  j = json{{"pass", v.pass},
           {"base_slice_exact", v.base_slice_exact},
           {"zero_column_exact", v.zero_column_exact},
           {"lipschitz_ratio", number(v.lipschitz_ratio)},
           {"bound_ratio", number(v.bound_ratio)}};
}

void to_json(json& j, const GraphClassReport& v) {
  j = json{{"pass", v.pass},
           {"zero_column_exact", v.zero_column_exact},
           {"lipschitz", number(v.lipschitz)},
           {"bound_ratio", number(v.bound_ratio)},
           {"flatness_constant", number(v.flatness_constant)}};
}

void to_json(json& j, const ResidualBudget& v) {
  j = json{{"tolerance_term", v.tolerance_term},
           {"tail_term", number(v.tail_term)},
           {"quadrature_term", number(v.quadrature_term)},
           {"interpolation_term", number(v.interpolation_term)},
           {"start_tail_term", number(v.start_tail_term)},
           {"amplification", number(v.amplification)},
           {"total", number(v.total())}};
}

void to_json(json& j, const ResidualReport& v) {
  json samples = json::array();
  for (const auto& s : v.samples) {
    samples.push_back(json{{"xi", s.xi},
                           {"max_residual", number(s.max_residual)},
                           {"t_at_max", s.t_at_max},
                           {"final_residual", number(s.final_residual)},
                           {"out_of_range", s.out_of_range},
                           {"escaped", s.escaped}});
  }
  j = json{{"pass", v.pass},
           {"horizon", v.horizon},
           {"offset", v.offset},
           {"max_residual", number(v.max_residual)},
           {"budget", v.budget},
           {"excluded", v.excluded},
           {"warning", v.warning},
           {"note", v.note},
           {"samples", samples}};
}

void to_json(json& j, const NegativeControlReport& v) {
  j = json{{"pass", v.pass},
           {"min_ratio", number(v.min_ratio)},
           {"on_manifold", v.on_manifold},
           {"off_manifold", v.off_manifold}};
}

void to_json(json& j, const TangencyReport& v) {
  j = json{{"pass", v.pass},
           {"flat", v.flat},
           {"slope", number(v.slope)},
           {"min_slope", number(v.min_slope)},
           {"min_slope_row", v.min_slope_row},
           {"points", v.points},
           {"flat_rows", v.flat_rows}};
}

void to_json(json& j, const ShootingResult& v) {
  j = json{{"eta", v.eta},
           {"bracket_width", v.bracket_width},
           {"bisections", v.bisections},
           {"t_escape", v.t_escape},
           {"contract_ok", v.contract_ok},
           {"envelope_ratio", number(v.envelope_ratio)}};
}

std::string witness_csv(std::span<const WitnessEntry> entries) {
  std::ostringstream os;
  os << "k,t,s,ratio,mu_s_pow_eps\n";
  for (const auto& e : entries) {
    os << e.k << ',' << format_double(e.t) << ',' << format_double(e.s) << ','
       << format_double(e.ratio) << ',' << format_double(e.mu_s_pow_eps) << '\n';
  }
  return os.str();
}

std::string graph_csv(const GraphFunction& phi) {
  std::ostringstream os;
  os << "s,xi,phi\n";
  for (std::size_t i = 0; i < phi.s_grid.count; ++i) {
    for (std::size_t k = 0; k < phi.xi.size(); ++k) {
      os << format_double(phi.s_grid.at(i)) << ',' << format_double(phi.xi.at(k)) << ','
         << format_double(phi.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)))
         << '\n';
    }
  }
  return os.str();
}

std::string trajectory_csv(const TrajectoryFamily& x) {
  std::ostringstream os;
  os << "t,xi,x\n";
  for (std::size_t i = 0; i < x.times.count; ++i) {
    for (std::size_t k = 0; k < x.xi.size(); ++k) {
      os << format_double(x.times.at(i)) << ',' << format_double(x.xi.at(k)) << ','
         << format_double(x.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)))
         << '\n';
    }
  }
  return os.str();
}

std::string semiflow_csv(const SemiflowSample& sample, const GraphFunction& phi) {
  std::ostringstream os;
  os << "t,x,y,phi_interp\n";
  for (std::size_t i = 0; i < sample.states.size(); ++i) {
    const double t = sample.times[i];
    const double x = sample.states[i](0);
    os << format_double(t) << ',' << format_double(x) << ',' << format_double(sample.states[i](1))
       << ',' << format_double(phi.evaluate(t, x)) << '\n';
  }
  return os.str();
}

json graph_to_json(const GraphFunction& phi) {
  return json{{"kind", "graph_function"},
              {"s_grid", phi.s_grid},
              {"xi_grid", phi.xi},
              {"values", matrix_json(phi.values)}};
}

GraphFunction graph_from_json(const json& j) {
  if (!j.is_object() || j.value("kind", "") != "graph_function") {
    throw ConfigError("not a graph_function document");
  }
  if (!j.contains("s_grid") || !j.contains("xi_grid") || !j.contains("values")) {
    throw ConfigError("graph_function document lacks grid metadata or values");
  }
  GraphFunction phi;
  phi.s_grid = time_grid_from_json(j.at("s_grid"));
  phi.xi = xi_grid_from_json(j.at("xi_grid"));
  phi.values = matrix_from_json(j.at("values"), phi.s_grid.count, phi.xi.size());
  return phi;
}

json trajectory_to_json(const TrajectoryFamily& x) {
  return json{{"kind", "trajectory_family"},
              {"base_index", x.base_index},
              {"times", x.times},
              {"xi_grid", x.xi},
              {"values", matrix_json(x.values)}};
}

TrajectoryFamily trajectory_from_json(const json& j) {
  if (!j.is_object() || j.value("kind", "") != "trajectory_family") {
    throw ConfigError("not a trajectory_family document");
  }
  if (!j.contains("times") || !j.contains("xi_grid") || !j.contains("values")) {
    throw ConfigError("trajectory_family document lacks grid metadata or values");
  }
  TrajectoryFamily x;
  x.base_index = read_size(j, "base_index");
  x.times = time_grid_from_json(j.at("times"));
  x.xi = xi_grid_from_json(j.at("xi_grid"));
  x.values = matrix_from_json(j.at("values"), x.times.count, x.xi.size());
  return x;
}

}  // namespace mumanifold
