#pragma once

#include "esn/training.hpp"

#include <json.hpp>

#include <filesystem>

namespace esn {

/// Model document: params, column layout, dense w_in, w_res as
/// (row, col, value) triplets, optional dense w_out and the training
/// metadata block. Doubles are written in shortest round-trip form, so a
/// loaded model predicts bit-for-bit like the original.
nlohmann::json to_json(const EsnModel& model);
EsnModel model_from_json(const nlohmann::json& doc);

nlohmann::json to_json(const EsnParams& params);
EsnParams params_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const CoupledSystemSpec& spec);
CoupledSystemSpec spec_from_json(const nlohmann::json& doc);

void save_model(const EsnModel& model, const std::filesystem::path& path);
EsnModel load_model(const std::filesystem::path& path);

}  // namespace esn
