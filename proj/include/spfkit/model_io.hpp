#pragma once

#include <string>

#include <nlohmann/json_fwd.hpp>

#include "spfkit/evaluate.hpp"
#include "spfkit/optimize.hpp"
#include "spfkit/types.hpp"

namespace spfkit {

inline constexpr int kModelSchemaVersion = 1;

nlohmann::json spec_to_json(const ModelSpec& spec);
ModelSpec spec_from_json(const nlohmann::json& j);

/// Full fit artifact: spec, coefficients, inference, and diagnostics.
/// Loadable by model_from_json for scoring.
nlohmann::json fit_to_json(const FitResult& fit, const std::string& label);

nlohmann::json model_to_json(const Model& model);
Model model_from_json(const nlohmann::json& j);

nlohmann::json validation_to_json(const ValidationReport& report);
nlohmann::json gof_to_json(const GofReport& report);

}  // namespace spfkit
