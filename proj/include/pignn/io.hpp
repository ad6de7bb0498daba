#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include "pignn/frobenius.hpp"
#include "pignn/graph.hpp"
#include "pignn/model.hpp"
#include "pignn/training.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

namespace pignn::io {

using nlohmann::json;

json graph_to_json(const Graph& g);
Graph graph_from_json(const json& j);

// Header line {"task": ..., "num_classes": ..., "target_dim": ..., "name": ...}
// followed by one graph object per line.
void write_dataset(const Dataset& ds, std::ostream& out);
void write_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset read_dataset(std::istream& in, const std::string& source = "<stream>");
Dataset read_dataset(const std::filesystem::path& path);

// N rows of comma-separated values with 17 significant digits.
void write_matrix_csv(const Eigen::MatrixXd& m, const std::filesystem::path& path);
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path);

// CSV plus a <path>.json sidecar {"n": N, "ids": [...]}.
void write_distance_matrix(const DistanceMatrix& dm, const std::filesystem::path& csv_path);
DistanceMatrix read_distance_matrix(const std::filesystem::path& csv_path);

json config_to_json(const PiGnnConfig& cfg);
PiGnnConfig config_from_json(const json& j);
json train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const json& j);

struct Checkpoint {
  PiGnnConfig config;
  ModelDims dims;
  PiGnnParams params;
};

// {"format_version": 1, "config": {...}, "dims": {...},
//  "tensors": {name: {"shape": [r, c], "data": [...row-major...]}}}
json checkpoint_to_json(const Checkpoint& ck);
Checkpoint checkpoint_from_json(const json& j);
void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

json report_to_json(const TrainReport& report);

// Writes j with full double precision.
void write_json(const json& j, const std::filesystem::path& path);
json read_json(const std::filesystem::path& path);

// Public plain-text benchmark layout: <dir>/<NAME>_A.txt (1-based edge list),
// <NAME>_graph_indicator.txt, <NAME>_graph_labels.txt and optionally
// <NAME>_node_labels.txt and <NAME>_node_attributes.txt.
Dataset load_tu_dataset(const std::filesystem::path& dir, std::string name = "");

}  // namespace pignn::io
