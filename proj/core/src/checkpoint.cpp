#include "gprompt/checkpoint.hpp"

#include "gprompt/dataset_io.hpp"
#include "gprompt/error.hpp"

namespace gprompt {

using nlohmann::json;

json tensors_to_json(const NamedTensors& tensors) {
  json out = json::object();
  for (const auto& [name, t] : tensors)
    out[name] = {{"shape", {t.rows(), t.cols()}},
                 {"data", std::vector<double>(t.data().begin(), t.data().end())}};
  return out;
}

void tensors_from_json(const json& j, const NamedTensors& into) {
  for (const auto& [name, t] : into) {
    if (!j.contains(name)) throw FormatError("checkpoint lacks tensor '" + name + "'");
    const auto& entry = j.at(name);
    const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
    if (shape.size() != 2 || shape[0] != t.rows() || shape[1] != t.cols())
      throw FormatError("checkpoint tensor '" + name + "' has the wrong shape");
    const auto data = entry.at("data").get<std::vector<double>>();
    if (data.size() != t.size()) throw FormatError("checkpoint tensor '" + name + "' has the wrong length");
    Tensor handle = t;
    std::copy(data.begin(), data.end(), handle.mutable_data().begin());
  }
}

json model_to_json(const GnnModel& model) {
  const auto& s = model.spec();
  return {{"architecture",
           {{"kind", to_string(s.kind)},
            {"in_dim", s.in_dim},
            {"hidden_dim", s.hidden_dim},
            {"num_layers", s.num_layers},
            {"num_classes", s.num_classes},
            {"leaky_slope", s.leaky_slope}}},
          {"tensors", tensors_to_json(model.parameters())}};
}

GnnModel model_from_json(const json& j) {
  try {
    const auto& a = j.at("architecture");
    ModelSpec spec;
    spec.kind = parse_gnn_kind(a.at("kind").get<std::string>());
    spec.in_dim = a.at("in_dim").get<std::size_t>();
    spec.hidden_dim = a.at("hidden_dim").get<std::size_t>();
    spec.num_layers = a.at("num_layers").get<std::size_t>();
    spec.num_classes = a.at("num_classes").get<std::size_t>();
    spec.leaky_slope = a.at("leaky_slope").get<double>();
    GnnModel model(spec, 0);
    tensors_from_json(j.at("tensors"), model.parameters());
    return model;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed model checkpoint: ") + e.what());
  } catch (const UsageError& e) {
    throw FormatError(std::string("malformed model checkpoint: ") + e.what());
  }
}

void save_model(const GnnModel& model, const std::filesystem::path& file) { write_json_file(model_to_json(model), file); }

GnnModel load_model(const std::filesystem::path& file) { return model_from_json(read_json_file(file)); }

}  // namespace gprompt
