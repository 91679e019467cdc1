#include <algorithm>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "mumanifold/errors.hpp"
#include "mumanifold/growth.hpp"
#include "mumanifold/linsys.hpp"
#include "mumanifold/perturb.hpp"
#include "mumanifold/verify.hpp"
#include "mumanifold_cli/cli.hpp"

namespace mumanifold::cli {

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write '" + path.string() + "'");
  os << text;
  if (!os) throw ConfigError("failed while writing '" + path.string() + "'");
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot read '" + path.string() + "'");
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

const char* verdict(bool pass) { return pass ? "PASS" : "FAIL"; }

bool same_grid(const TimeGrid& a, const TimeGrid& b) {
  return a.start == b.start && a.step == b.step && a.count == b.count;
}

}  // namespace

int cmd_dichotomy(const RunConfig& cfg, std::ostream& log) {
  const GrowthRate g = parse_growth(cfg.growth);
  const DichotomySpec spec = dichotomy_spec(cfg);
  if (!(cfg.grid_step > 0.0) || !(cfg.grid_t1 > 0.0)) {
    throw ConfigError("pair grid needs grid_t1 > 0 and grid_step > 0");
  }
  if (cfg.k_max < 1) throw ConfigError("k_max must be >= 1");
  const ClosedFormExample ex = example_system(g, cfg.a, cfg.b, cfg.eps);
  const PairGrid grid = PairGrid::uniform(0.0, cfg.grid_t1, cfg.grid_step);
  const DichotomyReport report = check_dichotomy(ex, spec, grid);
  const auto witness = nonuniformity_witness(ex, cfg.k_max);

  write_json(cfg.out / "dichotomy_report.json",
             json{{"pass", report.pass},
                  {"growth", g.label()},
                  {"example", {{"a", cfg.a}, {"b", cfg.b}, {"eps", cfg.eps}}},
                  {"report", report},
                  {"witness", witness}});
  write_text(cfg.out / "witness.csv", witness_csv(witness));
  log << "dichotomy " << verdict(report.pass) << "  D_min_U=" << format_double(report.D_min_U)
      << " D_min_V=" << format_double(report.D_min_V) << " (spec D=" << spec.D
      << ", eps=" << spec.eps << ")\n";
  return report.pass ? kPass : kCheckFailed;
}

int cmd_delta(const RunConfig& cfg, std::ostream& log) {
  const DeltaBounds bounds = delta_bounds(cfg);
  json j = bounds;
  j["delta"] = resolve_delta(cfg.delta, bounds);
  log << j.dump(2) << "\n";
  return kPass;
}

int cmd_solve(const RunConfig& cfg, std::ostream& log) {
  const ManifoldProblem problem = build_problem(cfg);
  const LyapunovPerronSolver solver(problem);
  const ManifoldSolution sol = solver.solve();
  const auto& diag = sol.diagnostics;

  json phi_doc = graph_to_json(sol.phi);
  phi_doc["config"] = config_to_json(cfg);
  phi_doc["delta"] = problem.f.delta();
  phi_doc["quadrature_estimate"] = diag.quadrature_estimate;
  write_json(cfg.out / "phi.json", phi_doc);
  write_text(cfg.out / "phi.csv", graph_csv(sol.phi));

  const auto [x, inner] = solver.solve_x(sol.phi, 0);
  write_text(cfg.out / "trajectory_s0.csv", trajectory_csv(x));

  const GraphClassReport graph_class = check_graph_class(sol.phi);
  const TrajectoryClassReport x_class =
      check_trajectory_class(x, problem.growth(), problem.spec, problem.C());
  write_json(cfg.out / "diagnostics.json",
             json{{"converged", diag.converged},
                  {"delta", problem.f.delta()},
                  {"delta_bounds", delta_bounds(cfg)},
                  {"outer", diag},
                  {"inner_at_s0", inner},
                  {"graph_class", graph_class},
                  {"trajectory_class_at_s0", x_class}});
  log << "solve " << (diag.converged ? "converged" : "did not converge") << " in "
      << diag.iterations << " outer iteration(s); residual " << format_double(diag.residual)
      << ", norm_X " << format_double(weighted_norm_X(sol.phi)) << "\n";
  return diag.converged ? kPass : kCheckFailed;
}

int cmd_verify(const RunConfig& cfg, std::ostream& log) {
  const fs::path phi_path = cfg.phi.empty() ? cfg.out / "phi.json" : cfg.phi;
  const json doc = read_json(phi_path);
  const GraphFunction phi = graph_from_json(doc);
  const ManifoldProblem problem = build_problem(cfg);
  problem.cfg.validate(problem.spec);
  const XiGrid xi = problem.cfg.xi_grid();
  if (!same_grid(phi.s_grid, problem.cfg.time_grid()) || phi.xi.step != xi.step ||
      phi.xi.half != xi.half) {
    throw ConfigError("grid metadata in '" + phi_path.string() +
                      "' does not match the configured solver grid");
  }
  const double quadrature_estimate = doc.value("quadrature_estimate", 0.0);

  const GraphClassReport graph_class = check_graph_class(phi);
  const TangencyReport tangency = tangency_check(phi);

  InvarianceOptions io;
  io.horizon = std::min(cfg.horizon, 0.5 * (problem.cfg.t_max - problem.cfg.s0));
  io.quadrature_estimate = quadrature_estimate;
  const NegativeControlReport control = negative_control(phi, problem, cfg.offset, io);

  const auto pairs = sample_xi_pairs(phi.xi, cfg.pairs, cfg.seed);
  DecayOptions decay_opts;
  decay_opts.horizon = io.horizon;
  const BoundReport decay = decay_check(phi, problem, pairs, decay_opts);
  const BoundReport derivative = derivative_decay_check(phi, problem, pairs, decay_opts);

  json oracle = json::array();
  bool oracle_pass = true;
  const double R = xi.radius();
  for (const double x : {-R, -0.6 * R, 0.0, 0.6 * R, R}) {
    const ShootingResult r = shooting_oracle(problem, problem.cfg.s0, x, {});
    const double diff = std::abs(r.eta - phi.evaluate(problem.cfg.s0, x));
    const bool ok = diff <= cfg.oracle_tolerance && r.contract_ok;
    oracle_pass = oracle_pass && ok;
    oracle.push_back(json{{"xi", x}, {"phi", phi.evaluate(problem.cfg.s0, x)}, {"difference", diff},
                          {"pass", ok}, {"shooting", r}});
  }

  const bool pass = graph_class.pass && tangency.pass && control.on_manifold.pass &&
                    control.pass && decay.pass && derivative.pass && oracle_pass;
  write_json(cfg.out / "verify_report.json",
             json{{"pass", pass},
                  {"phi", phi_path.string()},
                  {"graph_class", graph_class},
                  {"tangency", tangency},
                  {"invariance", control.on_manifold},
                  {"negative_control", control},
                  {"decay", decay},
                  {"derivative_decay", derivative},
                  {"oracle", {{"pass", oracle_pass}, {"tolerance", cfg.oracle_tolerance},
                              {"samples", oracle}}}});

  const TimeGrid grid = problem.cfg.time_grid();
  std::vector<double> nodes;
  for (std::size_t i = 0; i < grid.count && grid.at(i) <= grid.start + io.horizon + 1e-12; ++i) {
    nodes.push_back(grid.at(i));
  }
  for (const std::size_t k : {std::size_t{0}, xi.size() - 1}) {
    const PlanarState start(phi.xi.at(k), phi.values(0, static_cast<Eigen::Index>(k)));
    const SemiflowSample s =
        integrate_nonlinear(problem.system, problem.f, grid.start, start, nodes, io.ode);
    write_text(cfg.out / ("semiflow_k" + std::to_string(k) + ".csv"), semiflow_csv(s, phi));
  }

  log << "graph class      " << verdict(graph_class.pass) << "\n"
      << "tangency         " << verdict(tangency.pass) << "  slope " << tangency.slope << "\n"
      << "invariance       " << verdict(control.on_manifold.pass) << "  residual "
      << control.on_manifold.max_residual << " budget " << control.on_manifold.budget.total()
      << "\n"
      << "negative control " << verdict(control.pass) << "  min ratio " << control.min_ratio << "\n"
      << "decay            " << verdict(decay.pass) << "  max ratio " << decay.max_ratio << "\n"
      << "derivative decay " << verdict(derivative.pass) << "  max ratio " << derivative.max_ratio
      << "\n"
      << "oracle           " << verdict(oracle_pass) << "\n"
      << "verify " << verdict(pass) << "\n";
  return pass ? kPass : kCheckFailed;
}

namespace {

struct Override {
  CLI::Option* option;
  std::function<void(RunConfig&)> apply;
};

class FlagSet {
 public:
  explicit FlagSet(CLI::App& app) : app_(app) {}

  template <typename T, typename Setter>
  void add(const std::string& name, const std::string& help, Setter setter) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app_.add_option(name, *value, help);
    overrides_.push_back({opt, [value, setter](RunConfig& cfg) { setter(cfg, *value); }});
  }

  void apply(RunConfig& cfg) const {
    for (const auto& o : overrides_) {
      if (o.option->count() > 0) o.apply(cfg);
    }
  }

 private:
  CLI::App& app_;
  std::vector<Override> overrides_;
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stable manifolds of nonuniform mu-dichotomies", "mumanifold"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "JSON config file; flags override its values");

  FlagSet flags(app);
  flags.add<std::string>("--growth", "exp, exp:c=<v>, poly or log",
                         [](RunConfig& c, const std::string& v) { c.growth = v; });
  flags.add<double>("--a", "stable exponent", [](RunConfig& c, double v) { c.a = v; });
  flags.add<double>("--b", "unstable exponent", [](RunConfig& c, double v) { c.b = v; });
  flags.add<double>("--eps", "nonuniformity exponent", [](RunConfig& c, double v) { c.eps = v; });
  flags.add<double>("--spec-eps", "eps used by the dichotomy check",
                    [](RunConfig& c, double v) { c.spec_eps = v; });
  flags.add<double>("--bigD", "dichotomy constant D", [](RunConfig& c, double v) { c.D = v; });
  flags.add<double>("--bigC", "class constant C", [](RunConfig& c, double v) { c.solver.C = v; });
  flags.add<std::string>("--shape", "huber_swap or zero",
                         [](RunConfig& c, const std::string& v) { c.shape = v; });
  flags.add<std::string>("--delta", "number or auto:<fraction>",
                         [](RunConfig& c, const std::string& v) { c.delta = v; });
  flags.add<double>("--s0", "base time", [](RunConfig& c, double v) { c.solver.s0 = v; });
  flags.add<double>("--tmax", "truncation horizon", [](RunConfig& c, double v) { c.solver.t_max = v; });
  flags.add<double>("--tstep", "time grid spacing", [](RunConfig& c, double v) { c.solver.t_step = v; });
  flags.add<double>("--xi-range", "xi grid radius", [](RunConfig& c, double v) { c.solver.xi_range = v; });
  flags.add<double>("--xi-step", "xi grid spacing", [](RunConfig& c, double v) { c.solver.xi_step = v; });
  flags.add<double>("--tol-inner", "inner tolerance",
                    [](RunConfig& c, double v) { c.solver.tol_inner = v; });
  flags.add<double>("--tol-outer", "outer tolerance",
                    [](RunConfig& c, double v) { c.solver.tol_outer = v; });
  flags.add<std::string>("--quadrature", "trapezoid or simpson", [](RunConfig& c, const std::string& v) {
    c.solver.quadrature = parse_quadrature(v);
  });
  flags.add<unsigned>("--threads", "worker cap (0: hardware)",
                      [](RunConfig& c, unsigned v) { c.solver.threads = v; });
  flags.add<std::string>("--out", "output directory",
                         [](RunConfig& c, const std::string& v) { c.out = v; });
  flags.add<double>("--grid-step", "pair grid spacing for dichotomy",
                    [](RunConfig& c, double v) { c.grid_step = v; });
  flags.add<double>("--grid-t1", "pair grid end for dichotomy",
                    [](RunConfig& c, double v) { c.grid_t1 = v; });
  flags.add<int>("--k-max", "witness length", [](RunConfig& c, int v) { c.k_max = v; });
  flags.add<std::string>("--phi", "graph dataset for verify",
                         [](RunConfig& c, const std::string& v) { c.phi = v; });
  flags.add<double>("--horizon", "verification horizon", [](RunConfig& c, double v) { c.horizon = v; });
  flags.add<double>("--offset", "negative control offset", [](RunConfig& c, double v) { c.offset = v; });
  flags.add<std::size_t>("--pairs", "xi pairs for decay checks",
                         [](RunConfig& c, std::size_t v) { c.pairs = v; });

  std::function<int(const RunConfig&, std::ostream&)> command;
  auto sub = [&](const char* name, const char* help, auto fn) {
    CLI::App* s = app.add_subcommand(name, help);
    s->fallthrough();
    s->callback([&command, fn] { command = fn; });
  };
  sub("dichotomy", "check the dichotomy bounds and write the witness", cmd_dichotomy);
  sub("solve", "construct the stable manifold graph", cmd_solve);
  sub("verify", "verify a solved graph", cmd_verify);
  sub("delta", "print the smallness thresholds on delta", cmd_delta);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kPass;
    }
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) cfg = config_from_json(read_json(config_path), cfg);
    flags.apply(cfg);
    return command(cfg, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const PreconditionError& e) {
    err << "precondition error: " << e.what() << "\n";
    return kConfigError;
  } catch (const json::exception& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    err << "check failed: " << e.what() << "\n";
    return kCheckFailed;
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, out, err);
}

}  // namespace mumanifold::cli
