#pragma once

#include <nlohmann/json.hpp>

#include "lggd/geodesic.hpp"
#include "lggd/graph.hpp"
#include "lggd/learn.hpp"

namespace lggd {

/// JSON forms of the configuration and parameter types. Doubles are written
/// with round-trip precision; parsers reject unknown keys with ParseError.
nlohmann::json to_json_value(const SolverConfig& cfg);
nlohmann::json to_json_value(const TrainConfig& cfg);
nlohmann::json to_json_value(const PotentialParams& pot);
nlohmann::json to_json_value(const MlpParams& mlp);

SolverConfig solver_config_from_json(const nlohmann::json& j);
TrainConfig train_config_from_json(const nlohmann::json& j);
PotentialParams potential_from_json(const nlohmann::json& j);
MlpParams mlp_from_json(const nlohmann::json& j);

Norm norm_from_string(const std::string& s);
std::string norm_to_string(Norm norm);
BoundaryLossKind loss_kind_from_string(const std::string& s);
std::string loss_kind_to_string(BoundaryLossKind kind);

}  // namespace lggd
