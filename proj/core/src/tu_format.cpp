#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "gprompt/dataset_io.hpp"
#include "gprompt/error.hpp"

namespace gprompt {

namespace fs = std::filesystem;

namespace {

// One row per non-empty line; fields split on commas and whitespace.
std::vector<std::vector<std::string>> read_rows(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw IngestionError("cannot open " + file.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    std::vector<std::string> fields;
    std::string tok;
    while (ls >> tok) fields.push_back(tok);
    if (!fields.empty()) rows.push_back(std::move(fields));
  }
  return rows;
}

long parse_int(const std::string& s, const fs::path& file) {
  try {
    std::size_t pos = 0;
    long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError(file.filename().string() + ": expected integer, got '" + s + "'");
  }
}

double parse_double(const std::string& s, const fs::path& file) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError(file.filename().string() + ": expected number, got '" + s + "'");
  }
}

std::vector<long> read_int_column(const fs::path& file) {
  std::vector<long> out;
  for (const auto& row : read_rows(file)) out.push_back(parse_int(row.front(), file));
  return out;
}

std::string find_prefix(const fs::path& dir) {
  const std::string base = dir.filename().empty() ? dir.parent_path().filename().string() : dir.filename().string();
  if (fs::exists(dir / (base + "_A.txt"))) return base;
  std::optional<std::string> found;
  if (fs::is_directory(dir)) {
    for (const auto& entry : fs::directory_iterator(dir)) {
      const std::string name = entry.path().filename().string();
      if (name.size() > 6 && name.ends_with("_A.txt")) {
        if (found) throw IngestionError("several *_A.txt files in " + dir.string());
        found = name.substr(0, name.size() - 6);
      }
    }
  }
  if (!found) throw IngestionError("no DS_A.txt edge file in " + dir.string());
  return *found;
}

template <class T>
std::map<T, int> contiguous(const std::vector<T>& values) {
  std::map<T, int> m;
  for (const auto& v : values) m.emplace(v, 0);
  int next = 0;
  for (auto& [k, id] : m) id = next++;
  return m;
}

}  // namespace

Dataset load_tu_dataset(const fs::path& dir) {
  const std::string ds = find_prefix(dir);
  auto file = [&](const char* suffix) { return dir / (ds + suffix); };
  for (const char* mandatory : {"_A.txt", "_graph_indicator.txt", "_graph_labels.txt"})
    if (!fs::exists(file(mandatory))) throw IngestionError("missing mandatory file " + file(mandatory).string());

  const auto indicator = read_int_column(file("_graph_indicator.txt"));
  const auto graph_labels = read_int_column(file("_graph_labels.txt"));
  const std::size_t total_nodes = indicator.size();
  const std::size_t num_graphs = graph_labels.size();

  // Global node (0-based) -> (graph, local id).
  std::vector<std::size_t> graph_of(total_nodes), local_of(total_nodes);
  std::vector<std::size_t> sizes(num_graphs, 0);
  for (std::size_t v = 0; v < total_nodes; ++v) {
    const long gid = indicator[v];
    if (gid < 1 || static_cast<std::size_t>(gid) > num_graphs)
      throw FormatError("graph indicator " + std::to_string(gid) + " outside [1, " + std::to_string(num_graphs) + "]");
    graph_of[v] = static_cast<std::size_t>(gid - 1);
    local_of[v] = sizes[graph_of[v]]++;
  }

  std::optional<std::vector<long>> node_labels;
  if (fs::exists(file("_node_labels.txt"))) {
    node_labels = read_int_column(file("_node_labels.txt"));
    if (node_labels->size() != total_nodes) throw FormatError("node label count != node count");
  }
  std::optional<Matrix> attributes;
  if (fs::exists(file("_node_attributes.txt"))) {
    const auto rows = read_rows(file("_node_attributes.txt"));
    if (rows.size() != total_nodes) throw FormatError("node attribute rows != node count");
    const std::size_t width = rows.empty() ? 0 : rows.front().size();
    attributes = Matrix(total_nodes, width);
    for (std::size_t v = 0; v < total_nodes; ++v) {
      if (rows[v].size() != width) throw FormatError("ragged node attribute rows");
      for (std::size_t j = 0; j < width; ++j) (*attributes)(v, j) = parse_double(rows[v][j], file("_node_attributes.txt"));
    }
  }

  std::map<long, int> node_label_ids;
  if (node_labels) node_label_ids = contiguous(*node_labels);
  const std::size_t attr_dim = attributes ? attributes->cols : 0;
  const std::size_t onehot_dim = node_labels ? node_label_ids.size() : 0;
  const std::size_t dim = (attr_dim + onehot_dim) > 0 ? attr_dim + onehot_dim : 1;

  std::vector<Matrix> feats;
  std::vector<std::vector<int>> node_y(num_graphs);
  feats.reserve(num_graphs);
  for (auto s : sizes) feats.emplace_back(s, dim, attr_dim + onehot_dim == 0 ? 1.0 : 0.0);
  for (std::size_t v = 0; v < total_nodes; ++v) {
    Matrix& x = feats[graph_of[v]];
    const std::size_t r = local_of[v];
    for (std::size_t j = 0; j < attr_dim; ++j) x(r, j) = (*attributes)(v, j);
    if (node_labels) {
      const int id = node_label_ids.at((*node_labels)[v]);
      x(r, attr_dim + static_cast<std::size_t>(id)) = 1.0;
      node_y[graph_of[v]].push_back(id);
    }
  }

  std::vector<std::vector<Edge>> edges(num_graphs);
  const fs::path a_file = file("_A.txt");
  for (const auto& row : read_rows(a_file)) {
    if (row.size() < 2) throw FormatError("edge row with fewer than two endpoints");
    const long u = parse_int(row[0], a_file), v = parse_int(row[1], a_file);
    for (long e : {u, v})
      if (e < 1 || static_cast<std::size_t>(e) > total_nodes)
        throw FormatError("edge references absent node " + std::to_string(e));
    const auto gu = graph_of[static_cast<std::size_t>(u - 1)], gv = graph_of[static_cast<std::size_t>(v - 1)];
    if (gu != gv) throw FormatError("edge joins nodes of different graphs");
    edges[gu].emplace_back(static_cast<int>(local_of[static_cast<std::size_t>(u - 1)]),
                           static_cast<int>(local_of[static_cast<std::size_t>(v - 1)]));
  }

  const auto label_ids = contiguous(graph_labels);
  Dataset out;
  out.name = ds;
  out.num_classes = label_ids.size();
  out.feature_dim = dim;
  out.graphs.reserve(num_graphs);
  for (std::size_t gi = 0; gi < num_graphs; ++gi) {
    out.graphs.push_back(Graph::make(sizes[gi], std::move(edges[gi]), std::move(feats[gi]),
                                     label_ids.at(graph_labels[gi]), std::move(node_y[gi])));
  }
  return out;
}

}  // namespace gprompt
