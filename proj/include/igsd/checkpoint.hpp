#pragma once

#include <string>

#include "igsd/distill.hpp"
#include "igsd/tensor.hpp"

namespace igsd {

/// Binary parameter checkpoint: magic, format version, then name -> shape ->
/// row-major doubles per tensor. Round-trips bit-exactly.
void save_params(const std::string& path, const ParamMap& params);
ParamMap load_params(const std::string& path);

/// Full model state as one checkpoint: student/teacher parameters plus the
/// configuration and counters needed to rebuild the ModelState.
void save_model_state(const std::string& path, const ModelState& state);
ModelState load_model_state(const std::string& path);

}  // namespace igsd
