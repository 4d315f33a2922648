#pragma once

#include <string>

#include "mldf/cascade.hpp"

namespace mldf {

inline constexpr int kModelFormatVersion = 1;

std::string serialize_model(const CascadeModel& model);
CascadeModel deserialize_model(const std::string& text);

void save_model(const CascadeModel& model, const std::string& path);
CascadeModel load_model(const std::string& path);

}  // namespace mldf
