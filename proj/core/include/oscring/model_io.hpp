#pragma once

#include <string>

#include <nlohmann/json_fwd.hpp>

#include "oscring/model.hpp"

namespace oscring {

/// Parse a model description. Throws ConfigError on missing keys, shape
/// mismatches, or unknown nonlinearity names. Matrices are row-major lists.
RingModel model_from_json(const nlohmann::json& j);

RingModel load_model(const std::string& path);

nlohmann::json model_to_json(const RingModel& model);

void save_model(const RingModel& model, const std::string& path);

} // namespace oscring
