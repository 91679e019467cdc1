#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mumanifold/manifold.hpp"
#include "mumanifold/serialize.hpp"

namespace mumanifold::cli {

enum ExitCode : int { kPass = 0, kCheckFailed = 1, kConfigError = 2 };

struct RunConfig {
  std::string growth = "poly";
  double a = -1.0;
  double b = 1.0;
  double eps = 0.2;
  double D = 1.0;
  // Exponent used for the dichotomy check only; defaults to eps.
  std::optional<double> spec_eps;

  std::string shape = "huber_swap";
  std::string delta = "auto:0.5";

  SolverConfig solver{.C = 2.0};

  std::filesystem::path out = ".";

  // dichotomy
  double grid_t1 = 20.0;
  double grid_step = 0.25;
  int k_max = 5;

  // verify
  std::filesystem::path phi;  // empty selects <out>/phi.json
  double horizon = 20.0;
  double offset = 0.1;
  std::size_t pairs = 50;
  std::uint64_t seed = 20240;
  double oracle_tolerance = 1e-4;
};

/// Keys mirror the long flag names with '-' replaced by '_'. Unknown keys
/// and wrongly typed values throw ConfigError.
RunConfig config_from_json(const json& j, RunConfig base = {});
json config_to_json(const RunConfig& cfg);

/// A number, or "auto:<fraction>" meaning fraction * delta_max.
double resolve_delta(const std::string& delta, const DeltaBounds& bounds);

DichotomySpec dichotomy_spec(const RunConfig& cfg);
DeltaBounds delta_bounds(const RunConfig& cfg);
ManifoldProblem build_problem(const RunConfig& cfg);

int cmd_dichotomy(const RunConfig& cfg, std::ostream& log);
int cmd_solve(const RunConfig& cfg, std::ostream& log);
int cmd_verify(const RunConfig& cfg, std::ostream& log);
int cmd_delta(const RunConfig& cfg, std::ostream& log);

/// Full command line entry point; never throws.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mumanifold::cli
