#pragma once

#include <filesystem>
#include <json.hpp>

#include "rheo/predictor.hpp"
#include "rheo/training.hpp"

namespace rheo::io {

using nlohmann::json;

inline constexpr int kFormatVersion = 1;

json to_json(const data::ScalingSpec& s);
data::ScalingSpec scaling_from_json(const json& j);

json to_json(const nn::MlpConfig& c);
nn::MlpConfig config_from_json(const json& j);

json to_json(const physics::EmpiricalParams& p);
physics::EmpiricalParams params_from_json(const json& j);

/// Self-describing model documents. Weight matrices are stored row-major with
/// their shapes; doubles are written in shortest round-trip form, so loading
/// reproduces every weight bit for bit.
json to_json(const nn::TrainedModel& m);
json to_json(const model::TrainedGpr& m);

/// Throws ValidationError on a malformed or inconsistent document.
model::Predictor predictor_from_json(const json& j);
nn::TrainedModel network_from_json(const json& j);
model::TrainedGpr gpr_from_json(const json& j);

void write_json(const std::filesystem::path& path, const json& j);
/// Throws ValidationError when the file is missing or not JSON.
json read_json(const std::filesystem::path& path);

model::Predictor load_model(const std::filesystem::path& path);

}  // namespace rheo::io
