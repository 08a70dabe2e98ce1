#include "fnnet/model/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "fnnet/error.hpp"

namespace fnnet::model {

namespace {

nlohmann::json tensor_json(const Tensor& t) {
  return {{"shape", t.shape()}, {"data", std::vector<double>(t.data().begin(), t.data().end())}};
}

void load_tensor(const nlohmann::json& section, const std::string& name, Tensor& dst) {
  if (!section.contains(name)) throw SchemaError(0, "checkpoint is missing '" + name + "'");
  const auto& e = section.at(name);
  diff::Shape shape;
  std::vector<double> data;
  try {
    shape = e.at("shape").get<diff::Shape>();
    data = e.at("data").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& ex) {
    throw SchemaError(0, "checkpoint entry '" + name + "': " + ex.what());
  }
  if (shape != dst.shape())
    throw SchemaError(0, "checkpoint entry '" + name + "' has shape " + diff::shape_string(shape) + ", model expects " +
                             diff::shape_string(dst.shape()));
  dst = Tensor(std::move(shape), std::move(data));
}

}  // namespace

nlohmann::json checkpoint_to_json(const FNNet& model, std::size_t epoch) {
  nlohmann::json params = nlohmann::json::object();
  for (const Parameter* p : model.parameters()) params[p->name] = tensor_json(p->value);
  nlohmann::json buffers = nlohmann::json::object();
  for (const auto& [name, t] : model.buffers()) buffers[name] = tensor_json(*t);
  return {{"config", to_json(model.config())}, {"epoch", epoch}, {"params", params}, {"buffers", buffers}};
}

Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("config") || !j.contains("params"))
    throw SchemaError(0, "checkpoint needs 'config' and 'params'");
  Checkpoint ck{FNNet(config_from_json(j.at("config"))), j.value("epoch", std::size_t{0})};
  for (Parameter* p : ck.model.parameters()) {
    load_tensor(j.at("params"), p->name, p->value);
    p->grad = Tensor(p->value.shape());
  }
  const nlohmann::json empty = nlohmann::json::object();
  const auto& buffers = j.contains("buffers") ? j.at("buffers") : empty;
  for (auto& [name, t] : ck.model.buffers()) load_tensor(buffers, name, *t);
  return ck;
}

void save_checkpoint(const FNNet& model, std::size_t epoch, const std::filesystem::path& path) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + tmp.string() + "' for writing");
    out << checkpoint_to_json(model, epoch).dump() << '\n';
    if (!out) throw Error("write to '" + tmp.string() + "' failed");
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(0, "checkpoint '" + path.string() + "': " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace fnnet::model
