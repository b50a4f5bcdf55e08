#pragma once

#include <string>
#include <string_view>

#include "icesar/nn/train.hpp"

namespace icesar::nn {

inline constexpr int kCheckpointVersion = 1;

/// Versioned JSON: {version, kind, input, layers[], params[], recipe, standardization}.
/// Doubles are written with round-trip precision.
std::string serialize_model(const CnnModel& model, std::string_view kind = "classifier");
CnnModel deserialize_model(std::string_view bytes, std::string* kind = nullptr);

void save_model(const CnnModel& model, const std::string& path, std::string_view kind = "classifier");
CnnModel load_model(const std::string& path, std::string* kind = nullptr);

}  // namespace icesar::nn
