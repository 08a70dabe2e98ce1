#include "fnnet/datagen/dataset_io.hpp"

#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "fnnet/error.hpp"

namespace fnnet::datagen {

namespace {

void append_number(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

template <class Range>
void append_array(std::string& out, const Range& values) {
  out += '[';
  bool first = true;
  for (double v : values) {
    if (!first) out += ',';
    first = false;
    append_number(out, v);
  }
  out += ']';
}

std::vector<double> numbers(const nlohmann::json& j, const char* key, std::size_t line,
                            std::size_t expected = 0) {
  if (!j.contains(key)) throw SchemaError(line, std::string("missing field '") + key + "'");
  const auto& a = j.at(key);
  if (!a.is_array()) throw SchemaError(line, std::string("field '") + key + "' must be an array");
  std::vector<double> out;
  out.reserve(a.size());
  for (const auto& v : a) {
    if (!v.is_number()) throw SchemaError(line, std::string("field '") + key + "' must hold numbers");
    out.push_back(v.get<double>());
  }
  if (expected && out.size() != expected)
    throw SchemaError(line, std::string("field '") + key + "' must have " + std::to_string(expected) + " entries");
  return out;
}

geometry::CameraIntrinsics intrinsics(const std::vector<double>& v) { return {v[0], v[1], v[2], v[3]}; }

}  // namespace

std::string record_to_json_line(const DatasetRecord& rec) {
  std::string out = "{\"pair_id\":";
  out += nlohmann::json(rec.pair_id).dump();
  out += ",\"k1\":";
  append_array(out, std::vector<double>{rec.k1.fx, rec.k1.fy, rec.k1.cx, rec.k1.cy});
  out += ",\"k2\":";
  append_array(out, std::vector<double>{rec.k2.fx, rec.k2.fy, rec.k2.cx, rec.k2.cy});
  out += ",\"r\":";
  std::vector<double> r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r.push_back(rec.r(i, j));
  append_array(out, r);
  out += ",\"t\":";
  append_array(out, std::vector<double>{rec.t.x(), rec.t.y(), rec.t.z()});
  out += ",\"corrs\":";
  std::vector<double> flat;
  flat.reserve(4 * rec.corrs.size());
  for (const auto& c : rec.corrs) flat.insert(flat.end(), c.begin(), c.end());
  append_array(out, flat);
  out += ",\"labels\":[";
  for (std::size_t i = 0; i < rec.labels.size(); ++i) {
    if (i) out += ',';
    out += rec.labels[i] ? '1' : '0';
  }
  out += "]}";
  return out;
}

DatasetRecord record_from_json_line(const std::string& line, std::size_t line_number) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(line_number, std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw SchemaError(line_number, "record must be a JSON object");

  DatasetRecord rec;
  if (!j.contains("pair_id") || !j["pair_id"].is_string()) throw SchemaError(line_number, "missing field 'pair_id'");
  rec.pair_id = j["pair_id"].get<std::string>();
  rec.k1 = intrinsics(numbers(j, "k1", line_number, 4));
  rec.k2 = intrinsics(numbers(j, "k2", line_number, 4));
  const auto r = numbers(j, "r", line_number, 9);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) rec.r(a, b) = r[3 * a + b];
  const auto t = numbers(j, "t", line_number, 3);
  rec.t = geometry::Vec3(t[0], t[1], t[2]);

  const auto flat = numbers(j, "corrs", line_number);
  if (flat.size() % 4 != 0) throw SchemaError(line_number, "field 'corrs' length must be a multiple of 4");
  for (std::size_t i = 0; i < flat.size(); i += 4) rec.corrs.push_back({flat[i], flat[i + 1], flat[i + 2], flat[i + 3]});

  const auto labels = numbers(j, "labels", line_number);
  if (labels.size() != rec.corrs.size())
    throw SchemaError(line_number, "field 'labels' must have one entry per correspondence");
  for (double l : labels) {
    if (l != 0.0 && l != 1.0) throw SchemaError(line_number, "labels must be 0 or 1");
    rec.labels.push_back(l == 1.0 ? 1 : 0);
  }
  return rec;
}

void write_dataset(const std::vector<DatasetRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  for (const auto& r : records) out << record_to_json_line(r) << '\n';
  if (!out) throw Error("write to '" + path.string() + "' failed");
}

std::vector<DatasetRecord> read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  std::vector<DatasetRecord> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(record_from_json_line(line, n));
  }
  return out;
}

}  // namespace fnnet::datagen
