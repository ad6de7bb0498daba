#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include "pignn/frobenius.hpp"
#include "pignn/graph.hpp"
#include "pignn/model.hpp"
#include "pignn/training.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace pignn::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2, kIoError = 3 };

// {"model": {...}, "train": {...}, "dataset": path, "output_dir": path}.
// Relative paths are resolved against `base_dir`.
struct RunConfig {
  PiGnnConfig model;
  TrainConfig train;
  std::filesystem::path dataset;
  std::filesystem::path output_dir;
};

RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

// Evenly spaced subset of `count` graphs when count is set.
void cmd_gen(const CorpusRecipe& recipe, std::uint64_t seed, const std::filesystem::path& out,
             std::optional<int> count = std::nullopt);

// Checks every graph against budget.max_vertices_exact first and names the
// offenders in the OracleInfeasible message.
DistanceMatrix cmd_oracle(const std::filesystem::path& dataset, const std::filesystem::path& out,
                          const OracleBudget& budget, int threads = 1);

// Writes checkpoint.json, report.json and train_log.csv under cfg.output_dir.
TrainResult cmd_train(const RunConfig& cfg, std::ostream* progress = nullptr);

struct EvalOptions {
  std::filesystem::path checkpoint;  // ignored with oracle_as_model
  std::filesystem::path dataset;
  std::filesystem::path oracle_csv;
  std::filesystem::path out_dir;
  std::uint64_t seed = 0;  // random baseline
  bool oracle_as_model = false;
};

// Writes report.json with rows labelled model, random and uniform, plus
// heatmap CSVs and a manifest. Returns the report document.
nlohmann::json cmd_eval_distances(const EvalOptions& opts);

// Minimum eigenvalue of the double-centred matrix within 1e-3 of -0.366 and < 0.
bool verify_theorem1(const Eigen::MatrixXd& d2, std::ostream& out);
// rank(path_embedding_matrix(n)) == n for n in [n_min, n_max].
bool verify_prop1(std::ostream& out, int n_min = 2, int n_max = 8);

struct BenchOptions {
  std::vector<int> n_list{10, 20, 30, 40, 50};
  std::vector<int> p_list{5, 10, 15, 20, 25};
  int fixed_p = 10;
  int fixed_n = 50;
  int graphs = 200;
  int warmup_epochs = 2;
  int timed_epochs = 5;
  std::uint64_t seed = 0;
};

struct BenchRow {
  int n = 0;
  int p = 0;
  double seconds_per_epoch = 0;
};

// Two equal classes of Erdos-Renyi graphs (edge probability 0.2 vs 0.4).
Dataset bench_dataset(int n, int graphs, std::uint64_t seed);
std::vector<BenchRow> cmd_bench(const BenchOptions& opts, const std::filesystem::path& out);

// Full command line, without the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pignn::cli
