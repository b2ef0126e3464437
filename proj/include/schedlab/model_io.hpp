#pragma once

#include <span>
#include <string>
#include <vector>

#include "schedlab/process_model.hpp"

namespace schedlab {

/// Loads and validates models from a JSON document: either a bare array of
/// model objects or an object with a "models" array. Matrices are row-major
/// nested arrays of IEEE-754 doubles.
std::vector<ProcessModel> load_models(const std::string& path);

std::vector<ProcessModel> parse_models(const std::string& json_text);

/// Canonical serialization: fields in fixed order, numbers rendered with 17
/// significant digits, so save(load(x)) is a byte-level fixed point.
std::string models_to_json(std::span<const ProcessModel> models,
                           const std::string& metadata_json = "");

void save_models(const std::string& path, std::span<const ProcessModel> models,
                 const std::string& metadata_json = "");

/// 17-significant-digit rendering used across all emitted artifacts.
std::string format_double(double value);

}  // namespace schedlab
