#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "gprompt/graph.hpp"

namespace gprompt {

/// Reads a TUDataset directory (DS_A.txt, DS_graph_indicator.txt,
/// DS_graph_labels.txt, optional DS_node_labels.txt and
/// DS_node_attributes.txt). DS defaults to the directory name; if no such
/// prefix exists the single *_A.txt file in the directory decides it.
///
/// Node features are attributes followed by one-hot node labels when both
/// files exist, whichever exists otherwise, and a constant 1.0 column when
/// neither does. Graph labels are remapped to [0, C) in sorted order.
Dataset load_tu_dataset(const std::filesystem::path& dir);

// Native format:
// {name, num_classes, feature_dim,
//  graphs: [{n, edges: [[u,v],...], x: [[...],...], y, node_y}]}
// `y` and `node_y` are omitted when absent.
nlohmann::json dataset_to_json(const Dataset& ds);
Dataset dataset_from_json(const nlohmann::json& j);

Dataset load_dataset(const std::filesystem::path& file);
void save_dataset(const Dataset& ds, const std::filesystem::path& file);

/// Reads a whole JSON file; IngestionError if unreadable, FormatError if
/// not valid JSON.
nlohmann::json read_json_file(const std::filesystem::path& file);
void write_json_file(const nlohmann::json& j, const std::filesystem::path& file);

}  // namespace gprompt
