#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "gprompt/gnn.hpp"

namespace gprompt {

// Checkpoints are JSON documents:
//   {"architecture": {...}, "tensors": {name: {"shape": [r, c], "data": [...]}}}
// Doubles are written in shortest round-trip form, so reloads are exact.

nlohmann::json tensors_to_json(const NamedTensors& tensors);
/// Copies stored values into `into`, matching by name and checking shapes.
void tensors_from_json(const nlohmann::json& j, const NamedTensors& into);

nlohmann::json model_to_json(const GnnModel& model);
GnnModel model_from_json(const nlohmann::json& j);

void save_model(const GnnModel& model, const std::filesystem::path& file);
GnnModel load_model(const std::filesystem::path& file);

}  // namespace gprompt
