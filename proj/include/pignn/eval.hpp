#pragma once

#include <Eigen/Dense>

#include "pignn/frobenius.hpp"
#include "pignn/graph.hpp"
#include "pignn/model.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace pignn {

struct MsePearson {
  double mse = 0;
  // Empty when either series has zero variance.
  std::optional<double> pearson;
  std::size_t pairs = 0;
};

// Over the upper triangle including the diagonal (self-pairs count).
MsePearson mse_pearson(const Eigen::MatrixXd& model, const Eigen::MatrixXd& oracle);

struct DistanceReport {
  DistanceMatrix model_distances;
  DistanceMatrix oracle_distances;
  double mse = 0;
  std::optional<double> pearson;
};

DistanceReport make_report(DistanceMatrix model, DistanceMatrix oracle);

// Pairwise Euclidean distances of the raw v_adj embeddings.
DistanceMatrix model_distance_matrix(const Dataset& ds, const PiGnnParams& params,
                                     const PiGnnConfig& cfg, const ModelDims& dims);

struct TaskMetrics {
  std::optional<double> accuracy;  // classification
  Eigen::VectorXd mae;             // regression, one entry per target dimension
};

TaskMetrics task_metrics(const std::vector<Eigen::VectorXd>& predictions,
                         const std::vector<Target>& targets, const TaskSpec& task);

// Writes <dir>/model.csv, <dir>/oracle.csv and <dir>/manifest.json.
void export_heatmap_csv(const DistanceMatrix& model, const DistanceMatrix& oracle,
                        const std::filesystem::path& dir);

}  // namespace pignn
