#include "pignn/eval.hpp"

#include "pignn/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace pignn {

MsePearson mse_pearson(const Eigen::MatrixXd& model, const Eigen::MatrixXd& oracle) {
  if (model.rows() != oracle.rows() || model.cols() != oracle.cols() || model.rows() != model.cols()) {
    throw SizeError("mse_pearson: matrices must be square and of equal shape");
  }
  const Eigen::Index n = model.rows();
  std::vector<double> xs, ys;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j) {
      xs.push_back(model(i, j));
      ys.push_back(oracle(i, j));
    }
  MsePearson out;
  out.pairs = xs.size();
  if (xs.empty()) return out;
  const Eigen::Map<const Eigen::VectorXd> x(xs.data(), xs.size()), y(ys.data(), ys.size());
  out.mse = (x - y).squaredNorm() / static_cast<double>(xs.size());
  const Eigen::VectorXd dx = x.array() - x.mean();
  const Eigen::VectorXd dy = y.array() - y.mean();
  const double sx = dx.norm(), sy = dy.norm();
  if (sx > 0 && sy > 0) out.pearson = std::clamp(dx.dot(dy) / (sx * sy), -1.0, 1.0);
  return out;
}

DistanceReport make_report(DistanceMatrix model, DistanceMatrix oracle) {
  const MsePearson m = mse_pearson(model.values, oracle.values);
  DistanceReport r;
  r.model_distances = std::move(model);
  r.oracle_distances = std::move(oracle);
  r.mse = m.mse;
  r.pearson = m.pearson;
  return r;
}

DistanceMatrix model_distance_matrix(const Dataset& ds, const PiGnnParams& params,
                                     const PiGnnConfig& cfg, const ModelDims& dims) {
  const int count = static_cast<int>(ds.graphs.size());
  std::vector<Eigen::VectorXd> emb;
  emb.reserve(count);
  for (const auto& g : ds.graphs) emb.push_back(embed(g, params, cfg, dims));
  DistanceMatrix dm;
  dm.values = Eigen::MatrixXd::Zero(count, count);
  for (int i = 0; i < count; ++i) {
    dm.ids.push_back(std::to_string(i));
    for (int j = i + 1; j < count; ++j) dm.values(i, j) = dm.values(j, i) = (emb[i] - emb[j]).norm();
  }
  return dm;
}

TaskMetrics task_metrics(const std::vector<Eigen::VectorXd>& predictions,
                         const std::vector<Target>& targets, const TaskSpec& task) {
  if (predictions.size() != targets.size()) throw SizeError("task_metrics: length mismatch");
  TaskMetrics m;
  if (predictions.empty()) return m;
  if (task.is_classification()) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
      Eigen::Index arg = 0;
      predictions[i].maxCoeff(&arg);
      const int* cls = std::get_if<int>(&targets[i]);
      if (!cls) throw SchemaError("task_metrics: classification target must be a class id");
      if (arg == *cls) ++correct;
    }
    m.accuracy = static_cast<double>(correct) / static_cast<double>(predictions.size());
    return m;
  }
  m.mae = Eigen::VectorXd::Zero(task.target_dim);
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto* y = std::get_if<Eigen::VectorXd>(&targets[i]);
    if (!y || y->size() != task.target_dim || predictions[i].size() != task.target_dim) {
      throw SchemaError("task_metrics: regression target dimension mismatch");
    }
    m.mae += (predictions[i] - *y).cwiseAbs();
  }
  m.mae /= static_cast<double>(predictions.size());
  return m;
}

void export_heatmap_csv(const DistanceMatrix& model, const DistanceMatrix& oracle,
                        const std::filesystem::path& dir) {
  if (model.values.rows() != oracle.values.rows() || model.values.cols() != oracle.values.cols()) {
    throw SizeError("export_heatmap_csv: matrices differ in shape");
  }
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
  io::write_matrix_csv(model.values, dir / "model.csv");
  io::write_matrix_csv(oracle.values, dir / "oracle.csv");
  std::vector<std::string> ids = !model.ids.empty() ? model.ids : oracle.ids;
  if (ids.empty())
    for (Eigen::Index i = 0; i < model.values.rows(); ++i) ids.push_back(std::to_string(i));
  io::json manifest = {{"n", model.values.rows()},
                       {"ids", ids},
                       {"files", {{"model", "model.csv"}, {"oracle", "oracle.csv"}}}};
  io::write_json(manifest, dir / "manifest.json");
}

}  // namespace pignn
