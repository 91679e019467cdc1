#pragma once

#include <nlohmann/json.hpp>

#include <span>
#include <string>
#include <vector>

#include "mumanifold/growth.hpp"
#include "mumanifold/linsys.hpp"
#include "mumanifold/manifold.hpp"
#include "mumanifold/perturb.hpp"
#include "mumanifold/verify.hpp"

namespace mumanifold {

using json = nlohmann::json;

/// 17 significant digits; parses back to the identical double.
std::string format_double(double v);

void to_json(json& j, const GrowthValidation& v);
void to_json(json& j, const DichotomySpec& v);
void to_json(json& j, const PairGrid& v);
void to_json(json& j, const DichotomyReport& v);
void to_json(json& j, const WitnessEntry& v);
void to_json(json& j, const PerturbationReport& v);
void to_json(json& j, const DeltaBounds& v);
void to_json(json& j, const TimeGrid& v);
void to_json(json& j, const XiGrid& v);
void to_json(json& j, const InnerDiagnostics& v);
void to_json(json& j, const OuterDiagnostics& v);
void to_json(json& j, const BoundReport& v);
void to_json(json& j, const TrajectoryClassReport& v);
void to_json(json& j, const GraphClassReport& v);
void to_json(json& j, const ResidualBudget& v);
void to_json(json& j, const ResidualReport& v);
void to_json(json& j, const NegativeControlReport& v);
void to_json(json& j, const TangencyReport& v);
void to_json(json& j, const ShootingResult& v);

/// Columns k, t, s, ratio, mu_s_pow_eps.
std::string witness_csv(std::span<const WitnessEntry> entries);

/// Columns s, xi, phi; one line per grid node.
std::string graph_csv(const GraphFunction& phi);
/// Columns t, xi, x; one line per grid node.
std::string trajectory_csv(const TrajectoryFamily& x);
/// Columns t, x, y, phi_interp.
std::string semiflow_csv(const SemiflowSample& sample, const GraphFunction& phi);

/// {"kind": "graph_function", "s_grid": {...}, "xi_grid": {...}, "values": [[...]]}
json graph_to_json(const GraphFunction& phi);
/// Throws ConfigError when metadata is missing or inconsistent with the values.
GraphFunction graph_from_json(const json& j);

json trajectory_to_json(const TrajectoryFamily& x);
TrajectoryFamily trajectory_from_json(const json& j);

}  // namespace mumanifold
