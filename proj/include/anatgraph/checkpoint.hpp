#pragma once

#include <filesystem>

#include <json.hpp>

#include "anatgraph/layers.hpp"

namespace anatgraph {

inline constexpr int kCheckpointFormatVersion = 1;

/// JSON document: {"format", "format_version", "parameters": {name: {"shape", "values"}},
/// "buffers": {...}} with row-major float64 values.
nlohmann::json checkpoint_to_json(const ParameterCollector& params);
/// Copies values into the registered tensors/buffers; names and shapes must match exactly.
void checkpoint_from_json(const nlohmann::json& doc, const ParameterCollector& params);

void save_checkpoint(const std::filesystem::path& path, const ParameterCollector& params);
void load_checkpoint(const std::filesystem::path& path, const ParameterCollector& params);

}  // namespace anatgraph
