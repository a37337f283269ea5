#include <fstream>

#include "gprompt/dataset_io.hpp"
#include "gprompt/error.hpp"

namespace gprompt {

namespace fs = std::filesystem;
using nlohmann::json;

json read_json_file(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw IngestionError("cannot open " + file.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(file.string() + ": " + e.what());
  }
}

void write_json_file(const json& j, const fs::path& file) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file);
  if (!out) throw IngestionError("cannot write " + file.string());
  out << j.dump(1) << '\n';
}

json dataset_to_json(const Dataset& ds) {
  json graphs = json::array();
  for (const auto& g : ds.graphs) {
    json jg;
    jg["n"] = g.n;
    json edges = json::array();
    for (auto [u, v] : g.edges) edges.push_back({u, v});
    jg["edges"] = std::move(edges);
    json x = json::array();
    for (std::size_t r = 0; r < g.x.rows; ++r) {
      auto first = g.x.data.begin() + static_cast<std::ptrdiff_t>(r * g.x.cols);
      x.push_back(std::vector<double>(first, first + static_cast<std::ptrdiff_t>(g.x.cols)));
    }
    jg["x"] = std::move(x);
    if (g.y) jg["y"] = *g.y;
    if (g.has_node_labels()) jg["node_y"] = g.node_y;
    graphs.push_back(std::move(jg));
  }
  return json{{"name", ds.name},
              {"num_classes", ds.num_classes},
              {"feature_dim", ds.feature_dim},
              {"graphs", std::move(graphs)}};
}

Dataset dataset_from_json(const json& j) {
  try {
    Dataset ds;
    ds.name = j.at("name").get<std::string>();
    ds.num_classes = j.at("num_classes").get<std::size_t>();
    ds.feature_dim = j.at("feature_dim").get<std::size_t>();
    for (const auto& jg : j.at("graphs")) {
      const auto n = jg.at("n").get<std::size_t>();
      std::vector<Edge> edges;
      for (const auto& e : jg.at("edges")) edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
      Matrix x(n, ds.feature_dim);
      const auto& rows = jg.at("x");
      if (rows.size() != n) throw FormatError("feature row count does not match n");
      for (std::size_t r = 0; r < n; ++r) {
        if (rows[r].size() != ds.feature_dim) throw FormatError("feature row width does not match feature_dim");
        for (std::size_t c = 0; c < ds.feature_dim; ++c) x(r, c) = rows[r][c].get<double>();
      }
      std::optional<int> y;
      if (jg.contains("y") && !jg["y"].is_null()) y = jg["y"].get<int>();
      std::vector<int> node_y;
      if (jg.contains("node_y")) node_y = jg["node_y"].get<std::vector<int>>();
      ds.graphs.push_back(Graph::make(n, std::move(edges), std::move(x), y, std::move(node_y)));
    }
    ds.validate();
    return ds;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed dataset JSON: ") + e.what());
  } catch (const ContractError& e) {
    throw FormatError(std::string("invalid dataset: ") + e.what());
  }
}

Dataset load_dataset(const fs::path& file) { return dataset_from_json(read_json_file(file)); }

void save_dataset(const Dataset& ds, const fs::path& file) { write_json_file(dataset_to_json(ds), file); }

}  // namespace gprompt
