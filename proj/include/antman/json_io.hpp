#pragma once

#include <json.hpp>

#include "antman/config.hpp"

namespace antman {

void to_json(nlohmann::json& j, const CompressionConfig& cfg);
void from_json(const nlohmann::json& j, CompressionConfig& cfg);

}  // namespace antman
