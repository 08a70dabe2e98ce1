#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fnnet/datagen/scene.hpp"

namespace fnnet::datagen {

// One JSON object per line with keys pair_id, k1, k2 ([fx,fy,cx,cy]),
// r (9, row-major), t (3), corrs (4N, pixels), labels (N of 0/1).
// Numbers are printed with 17 significant digits so doubles round-trip.
std::string record_to_json_line(const DatasetRecord& record);

// `line_number` is only used in error messages.
DatasetRecord record_from_json_line(const std::string& line, std::size_t line_number = 0);

void write_dataset(const std::vector<DatasetRecord>& records, const std::filesystem::path& path);

// Blank lines are skipped. Throws ParseError/SchemaError naming the line.
std::vector<DatasetRecord> read_dataset(const std::filesystem::path& path);

}  // namespace fnnet::datagen
