#include "anatgraph/checkpoint.hpp"

#include <fstream>

namespace anatgraph {

using nlohmann::json;

namespace {

json entry(const Shape& shape, const Vector& values) {
  return json{{"shape", shape}, {"values", std::vector<double>(values.begin(), values.end())}};
}

Vector read_entry(const json& section, const std::string& name, const Shape& expected) {
  if (!section.contains(name)) throw CheckpointError("checkpoint is missing '" + name + "'");
  const json& e = section.at(name);
  Shape shape;
  std::vector<double> values;
  try {
    shape = e.at("shape").get<Shape>();
    values = e.at("values").get<std::vector<double>>();
  } catch (const json::exception& ex) {
    throw CheckpointError("checkpoint entry '" + name + "' is malformed: " + ex.what());
  }
  if (shape != expected)
    throw CheckpointError("checkpoint entry '" + name + "' has shape " + to_string(shape) +
                          ", model expects " + to_string(expected));
  if (static_cast<Index>(values.size()) != numel(shape))
    throw CheckpointError("checkpoint entry '" + name + "' has the wrong number of values");
  return Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
}

}  // namespace

json checkpoint_to_json(const ParameterCollector& params) {
  json doc;
  doc["format"] = "anatgraph-checkpoint";
  doc["format_version"] = kCheckpointFormatVersion;
  json& p = doc["parameters"] = json::object();
  for (const auto& ref : params.parameters()) p[ref.name] = entry(ref.tensor.shape(), ref.tensor.data());
  json& b = doc["buffers"] = json::object();
  for (const auto& ref : params.buffers()) b[ref.name] = entry({ref.data->size()}, *ref.data);
  return doc;
}

void checkpoint_from_json(const json& doc, const ParameterCollector& params) {
  if (!doc.is_object() || doc.value("format", "") != "anatgraph-checkpoint")
    throw CheckpointError("not an anatgraph checkpoint");
  if (doc.value("format_version", -1) != kCheckpointFormatVersion)
    throw CheckpointError("unsupported checkpoint format_version");
  const json& p = doc.at("parameters");
  const json& b = doc.at("buffers");
  if (p.size() != params.parameters().size() || b.size() != params.buffers().size())
    throw CheckpointError("checkpoint parameter set does not match the model");
  // Validate everything before mutating anything.
  std::vector<Vector> values;
  for (const auto& ref : params.parameters()) values.push_back(read_entry(p, ref.name, ref.tensor.shape()));
  std::vector<Vector> buffers;
  for (const auto& ref : params.buffers()) buffers.push_back(read_entry(b, ref.name, {ref.data->size()}));
  for (std::size_t i = 0; i < values.size(); ++i) {
    Tensor t = params.parameters()[i].tensor;
    t.mutable_data() = values[i];
  }
  for (std::size_t i = 0; i < buffers.size(); ++i) *params.buffers()[i].data = buffers[i];
}

void save_checkpoint(const std::filesystem::path& path, const ParameterCollector& params) {
  std::ofstream out(path);
  if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
  out << checkpoint_to_json(params).dump() << '\n';
}

void load_checkpoint(const std::filesystem::path& path, const ParameterCollector& params) {
  std::ifstream in(path);
  if (!in) throw CheckpointError("cannot read checkpoint " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& ex) {
    throw CheckpointError("checkpoint " + path.string() + " is not valid JSON: " + ex.what());
  }
  checkpoint_from_json(doc, params);
}

}  // namespace anatgraph
