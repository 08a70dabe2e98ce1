#pragma once

#include <cstddef>
#include <filesystem>

#include <json.hpp>

#include "fnnet/model/fnnet.hpp"

namespace fnnet::model {

struct Checkpoint {
  FNNet model;
  std::size_t epoch = 0;
};

// {"config": {...}, "epoch": e, "params": {name: {"shape": [...], "data": [...]}},
//  "buffers": {name: {...}}}. Doubles round-trip exactly.
nlohmann::json checkpoint_to_json(const FNNet& model, std::size_t epoch);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

// Writes to a sibling temporary file and renames it, so an existing
// checkpoint survives a failed write.
void save_checkpoint(const FNNet& model, std::size_t epoch, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace fnnet::model
