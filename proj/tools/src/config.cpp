#include <charconv>
#include <string>

#include "mumanifold/errors.hpp"
#include "mumanifold/growth.hpp"
#include "mumanifold/linsys.hpp"
#include "mumanifold/perturb.hpp"
#include "mumanifold/quadrature.hpp"
#include "mumanifold_cli/cli.hpp"

namespace mumanifold::cli {

namespace {

template <typename T>
T read(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

double read_number(const json& j, const std::string& key) {
  if (!j.is_number()) throw ConfigError("config key '" + key + "' must be a number");
  return j.get<double>();
}

}  // namespace

RunConfig config_from_json(const json& j, RunConfig cfg) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    if (key == "growth") cfg.growth = read<std::string>(v, key);
    else if (key == "a") cfg.a = read_number(v, key);
    else if (key == "b") cfg.b = read_number(v, key);
    else if (key == "eps") cfg.eps = read_number(v, key);
    else if (key == "bigD") cfg.D = read_number(v, key);
    else if (key == "bigC") cfg.solver.C = read_number(v, key);
    else if (key == "spec_eps") cfg.spec_eps = read_number(v, key);
    else if (key == "shape") cfg.shape = read<std::string>(v, key);
    else if (key == "delta") cfg.delta = v.is_number() ? format_double(v.get<double>())
                                                      : read<std::string>(v, key);
    else if (key == "s0") cfg.solver.s0 = read_number(v, key);
    else if (key == "tmax") cfg.solver.t_max = read_number(v, key);
    else if (key == "tstep") cfg.solver.t_step = read_number(v, key);
    else if (key == "xi_range") cfg.solver.xi_range = read_number(v, key);
    else if (key == "xi_step") cfg.solver.xi_step = read_number(v, key);
    else if (key == "tol_inner") cfg.solver.tol_inner = read_number(v, key);
    else if (key == "tol_outer") cfg.solver.tol_outer = read_number(v, key);
    else if (key == "max_iter_inner") cfg.solver.max_iter_inner = read<int>(v, key);
    else if (key == "max_iter_outer") cfg.solver.max_iter_outer = read<int>(v, key);
    else if (key == "quadrature") cfg.solver.quadrature = parse_quadrature(read<std::string>(v, key));
    else if (key == "grid_slack") cfg.solver.grid_slack = read_number(v, key);
    else if (key == "tail_tolerance") cfg.solver.tail_tolerance = read_number(v, key);
    else if (key == "threads") cfg.solver.threads = read<unsigned>(v, key);
    else if (key == "out") cfg.out = read<std::string>(v, key);
    else if (key == "grid_t1") cfg.grid_t1 = read_number(v, key);
    else if (key == "grid_step") cfg.grid_step = read_number(v, key);
    else if (key == "k_max") cfg.k_max = read<int>(v, key);
    else if (key == "phi") cfg.phi = read<std::string>(v, key);
    else if (key == "horizon") cfg.horizon = read_number(v, key);
    else if (key == "offset") cfg.offset = read_number(v, key);
    else if (key == "pairs") cfg.pairs = read<std::size_t>(v, key);
    else if (key == "seed") cfg.seed = read<std::uint64_t>(v, key);
    else if (key == "oracle_tolerance") cfg.oracle_tolerance = read_number(v, key);
    else throw ConfigError("unknown config key '" + key + "'");
  }
  return cfg;
}

json config_to_json(const RunConfig& cfg) {
  json j{{"growth", cfg.growth},
         {"a", cfg.a},
         {"b", cfg.b},
         {"eps", cfg.eps},
         {"bigD", cfg.D},
         {"bigC", cfg.solver.C},
         {"shape", cfg.shape},
         {"delta", cfg.delta},
         {"s0", cfg.solver.s0},
         {"tmax", cfg.solver.t_max},
         {"tstep", cfg.solver.t_step},
         {"xi_range", cfg.solver.xi_range},
         {"xi_step", cfg.solver.xi_step},
         {"tol_inner", cfg.solver.tol_inner},
         {"tol_outer", cfg.solver.tol_outer},
         {"max_iter_inner", cfg.solver.max_iter_inner},
         {"max_iter_outer", cfg.solver.max_iter_outer},
         {"quadrature", std::string(to_string(cfg.solver.quadrature))},
         {"grid_slack", cfg.solver.grid_slack},
         {"tail_tolerance", cfg.solver.tail_tolerance},
         {"grid_t1", cfg.grid_t1},
         {"grid_step", cfg.grid_step},
         {"k_max", cfg.k_max},
         {"horizon", cfg.horizon},
         {"offset", cfg.offset},
         {"pairs", cfg.pairs},
         {"seed", cfg.seed},
         {"oracle_tolerance", cfg.oracle_tolerance}};
  if (cfg.spec_eps) j["spec_eps"] = *cfg.spec_eps;
  return j;
}

double resolve_delta(const std::string& delta, const DeltaBounds& bounds) {
  std::string_view text = delta;
  double scale = 1.0;
  if (text.starts_with("auto:")) {
    text.remove_prefix(5);
    scale = bounds.delta_max;
  }
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size() ||
      !(value >= 0.0)) {
    throw ConfigError("delta must be a nonnegative number or auto:<fraction>, got '" + delta + "'");
  }
  return scale * value;
}

DichotomySpec dichotomy_spec(const RunConfig& cfg) {
  DichotomySpec spec{cfg.D, cfg.a, cfg.b, cfg.spec_eps.value_or(cfg.eps)};
  spec.validate();
  return spec;
}

DeltaBounds delta_bounds(const RunConfig& cfg) {
  const DichotomySpec spec{cfg.D, cfg.a, cfg.b, cfg.eps};
  return delta_max(cfg.D, cfg.solver.class_constant(spec), cfg.eps, cfg.a, cfg.b);
}

ManifoldProblem build_problem(const RunConfig& cfg) {
  const GrowthRate g = parse_growth(cfg.growth);
  const DichotomySpec spec{cfg.D, cfg.a, cfg.b, cfg.eps};
  spec.validate();
  const ShapeKind kind = parse_shape(cfg.shape);
  const double delta = resolve_delta(cfg.delta, delta_bounds(cfg));
  const ClosedFormExample ex = example_system(g, cfg.a, cfg.b, cfg.eps);
  return ManifoldProblem{planar_system(ex), make_perturbation(g, cfg.eps, delta, kind), spec,
                         cfg.solver};
}

}  // namespace mumanifold::cli
