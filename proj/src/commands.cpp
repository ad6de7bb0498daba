#include "pignn/commands.hpp"

#include "pignn/eval.hpp"
#include "pignn/io.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace pignn::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path resolve(const fs::path& p, const fs::path& base) {
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return base / p;
}

json metrics_row(const std::string& label, const MsePearson& m) {
  return {{"label", label}, {"mse", m.mse}, {"pearson", m.pearson ? json(*m.pearson) : json(nullptr)}};
}

}  // namespace

RunConfig run_config_from_json(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw SchemaError("run config: expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key != "model" && key != "train" && key != "dataset" && key != "output_dir") {
      throw SchemaError("run config: unknown key '" + key + "'");
    }
  }
  for (const char* key : {"model", "train", "dataset", "output_dir"}) {
    if (!j.contains(key)) throw SchemaError(std::string("run config: missing key '") + key + "'");
  }
  RunConfig cfg;
  cfg.model = io::config_from_json(j.at("model"));
  cfg.train = io::train_config_from_json(j.at("train"));
  if (!j["dataset"].is_string() || !j["output_dir"].is_string()) {
    throw SchemaError("run config: dataset and output_dir must be strings");
  }
  cfg.dataset = resolve(j["dataset"].get<std::string>(), base_dir);
  cfg.output_dir = resolve(j["output_dir"].get<std::string>(), base_dir);
  return cfg;
}

RunConfig load_run_config(const fs::path& path) {
  return run_config_from_json(io::read_json(path), path.parent_path());
}

void cmd_gen(const CorpusRecipe& recipe, std::uint64_t seed, const fs::path& out, std::optional<int> count) {
  Dataset ds = synthetic_corpus(recipe, seed);
  if (count) {
    const int total = static_cast<int>(ds.graphs.size());
    if (*count < 1 || *count > total) {
      throw std::invalid_argument("gen: count must lie in [1, " + std::to_string(total) + "]");
    }
    std::vector<Graph> picked;
    for (int i = 0; i < *count; ++i) {
      picked.push_back(ds.graphs[static_cast<std::size_t>(static_cast<long>(i) * total / *count)]);
    }
    ds.graphs = std::move(picked);
  }
  io::write_dataset(ds, out);
}

DistanceMatrix cmd_oracle(const fs::path& dataset, const fs::path& out, const OracleBudget& budget, int threads) {
  const Dataset ds = io::read_dataset(dataset);
  std::ostringstream offenders;
  int bad = 0;
  for (std::size_t i = 0; i < ds.graphs.size(); ++i) {
    if (ds.graphs[i].num_vertices() > budget.max_vertices_exact) {
      offenders << (bad++ ? ", " : "") << i << " (n=" << ds.graphs[i].num_vertices() << ")";
    }
  }
  if (bad) {
    throw OracleInfeasible("oracle: graphs exceed the exact budget of " + std::to_string(budget.max_vertices_exact) +
                           " vertices: " + offenders.str());
  }
  DistanceMatrix dm = distance_matrix(ds, budget, threads);
  io::write_distance_matrix(dm, out);
  return dm;
}

TrainResult cmd_train(const RunConfig& cfg, std::ostream* progress) {
  const Dataset ds = io::read_dataset(cfg.dataset);
  std::ostringstream log;
  log << "epoch,train_loss,val_loss\n" << std::setprecision(17);
  TrainResult result = train(ds, cfg.model, cfg.train, &log);
  fs::create_directories(cfg.output_dir);
  io::save_checkpoint({cfg.model, result.dims, result.best_params}, cfg.output_dir / "checkpoint.json");
  io::write_json(io::report_to_json(result.report), cfg.output_dir / "report.json");
  std::ofstream csv(cfg.output_dir / "train_log.csv", std::ios::binary);
  if (!csv) throw IoError("cannot write " + (cfg.output_dir / "train_log.csv").string());
  csv << log.str();
  if (progress) {
    *progress << "trained " << cfg.train.epochs << " epochs; best epoch " << result.report.best_epoch
              << " with validation loss " << result.report.best_val_loss << '\n';
  }
  return result;
}

json cmd_eval_distances(const EvalOptions& opts) {
  const Dataset ds = io::read_dataset(opts.dataset);
  const DistanceMatrix oracle = io::read_distance_matrix(opts.oracle_csv);
  if (oracle.size() != static_cast<Eigen::Index>(ds.graphs.size())) {
    throw SizeError("eval-distances: dataset has " + std::to_string(ds.graphs.size()) +
                    " graphs but the oracle matrix is " + std::to_string(oracle.size()) + " x " +
                    std::to_string(oracle.size()));
  }
  DistanceMatrix model;
  if (opts.oracle_as_model) {
    model = oracle;
  } else {
    const io::Checkpoint ck = io::load_checkpoint(opts.checkpoint);
    model = model_distance_matrix(ds, ck.params, ck.config, ck.dims);
  }
  const DistanceMatrix random = random_baseline_matrix(ds, opts.seed);
  const DistanceMatrix uniform = uniform_baseline_matrix(ds);
  const MsePearson m = mse_pearson(model.values, oracle.values);
  json report = {{"n", oracle.size()},
                 {"pairs", m.pairs},
                 {"seed", opts.seed},
                 {"oracle_as_model", opts.oracle_as_model},
                 {"rows",
                  {metrics_row("model", m), metrics_row("random", mse_pearson(random.values, oracle.values)),
                   metrics_row("uniform", mse_pearson(uniform.values, oracle.values))}}};
  fs::create_directories(opts.out_dir);
  io::write_json(report, opts.out_dir / "report.json");
  export_heatmap_csv(model, oracle, opts.out_dir);
  return report;
}

bool verify_theorem1(const Eigen::MatrixXd& d2, std::ostream& out) {
  const auto eig = sym_eigenvalues(double_center(d2));
  out << "eigenvalues:";
  for (double e : eig) out << ' ' << std::fixed << std::setprecision(6) << e;
  out << std::defaultfloat << '\n';
  const double lo = eig.empty() ? 0.0 : eig.front();
  const bool pass = lo < 0 && std::abs(lo - (-0.366)) <= 1e-3;
  out << "min eigenvalue " << std::setprecision(6) << lo << '\n' << (pass ? "PASS" : "FAIL") << '\n';
  return pass;
}

bool verify_prop1(std::ostream& out, int n_min, int n_max) {
  bool pass = true;
  for (int n = n_min; n <= n_max; ++n) {
    const int r = matrix_rank(path_embedding_matrix(n));
    out << "n=" << n << " rank=" << r << '\n';
    pass = pass && r == n;
  }
  out << (pass ? "PASS" : "FAIL") << '\n';
  return pass;
}

Dataset bench_dataset(int n, int graphs, std::uint64_t seed) {
  if (graphs < 2 || graphs % 2) throw std::invalid_argument("bench: graph count must be even and >= 2");
  Dataset ds;
  ds.name = "bench_er_n" + std::to_string(n);
  ds.task = TaskSpec::classification(2);
  for (int i = 0; i < graphs; ++i) {
    const int cls = i % 2;
    GeneratorParams gp;
    gp.n = n;
    gp.prob = cls ? 0.4 : 0.2;
    gp.max_retries = 1000;
    Graph g = generate(GraphKind::ErdosRenyi, gp, seed * 1000003ULL + static_cast<std::uint64_t>(i));
    g.set_target(cls);
    ds.graphs.push_back(std::move(g));
  }
  return ds;
}

std::vector<BenchRow> cmd_bench(const BenchOptions& opts, const fs::path& out) {
  if (opts.timed_epochs < 1 || opts.warmup_epochs < 0) throw std::invalid_argument("bench: bad epoch counts");
  std::vector<std::pair<int, int>> sweep;
  for (int n : opts.n_list) sweep.emplace_back(n, opts.fixed_p);
  for (int p : opts.p_list) sweep.emplace_back(opts.fixed_n, p);

  std::vector<BenchRow> rows;
  for (const auto& [n, p] : sweep) {
    const Dataset ds = bench_dataset(n, opts.graphs, opts.seed);
    PiGnnConfig cfg;
    cfg.num_latent = p;
    cfg.task = ds.task;
    TrainConfig tc;
    tc.seed = opts.seed;
    const ModelDims dims = ModelDims::from_schema(FeatureSchema::infer(ds));
    PiGnnParams params = init_params(cfg, dims, opts.seed);
    AdamState state = AdamState::zeros_like(params);
    std::vector<int> order(ds.graphs.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(opts.seed);

    std::vector<double> times;
    for (int epoch = 0; epoch < opts.warmup_epochs + opts.timed_epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      const auto start = std::chrono::steady_clock::now();
      for (std::size_t b = 0; b < order.size(); b += tc.batch_size) {
        const std::vector<int> batch(order.begin() + b, order.begin() + std::min(order.size(), b + tc.batch_size));
        PiGnnParams grads;
        batch_gradient(ds, batch, params, cfg, dims, grads);
        adam_step(params, grads, state, tc);
      }
      const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
      if (epoch >= opts.warmup_epochs) times.push_back(dt.count());
    }
    std::sort(times.begin(), times.end());
    const std::size_t mid = times.size() / 2;
    const double median = times.size() % 2 ? times[mid] : 0.5 * (times[mid - 1] + times[mid]);
    rows.push_back({n, p, median});
  }

  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  std::ofstream csv(out, std::ios::binary);
  if (!csv) throw IoError("cannot write " + out.string());
  csv << "n,p,seconds_per_epoch\n" << std::setprecision(9);
  for (const auto& r : rows) csv << r.n << ',' << r.p << ',' << r.seconds_per_epoch << '\n';
  return rows;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"pignn: permutation-invariant graph embeddings and exact graph distances"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  std::string out_dir, config_path, dataset, checkpoint, oracle_csv, recipe = "standard", which, d2_path;
  std::string tu_dir, tu_name;
  int threads = 1, budget = OracleBudget{}.max_vertices_exact, max_n = 7;
  std::optional<int> count;
  bool oracle_as_model = false;
  BenchOptions bench;

  auto* gen = app.add_subcommand("gen", "write the synthetic corpus as JSON lines");
  gen->add_option("--recipe", recipe, "standard or small")->check(CLI::IsMember({"standard", "small"}));
  gen->add_option("--max-n", max_n, "largest vertex count for the small recipe");
  gen->add_option("--count", count, "keep an evenly spaced subset of this many graphs");
  gen->add_option("--seed", seed);
  gen->add_option("--out", out_dir, "output directory; writes corpus.jsonl")->required();

  auto* oracle = app.add_subcommand("oracle", "exact pairwise Frobenius distances");
  oracle->add_option("--dataset", dataset)->required();
  oracle->add_option("--out", out_dir, "output directory; writes oracle.csv")->required();
  oracle->add_option("--budget", budget, "largest graph solved exactly");
  oracle->add_option("--threads", threads)->check(CLI::PositiveNumber);

  auto* trn = app.add_subcommand("train", "train a model from a run config");
  trn->add_option("--config", config_path)->required();
  std::optional<std::uint64_t> seed_override;
  trn->add_option("--seed", seed_override, "overrides train.seed");
  trn->add_option("--out", out_dir, "overrides output_dir");

  auto* ev = app.add_subcommand("eval-distances", "model vs oracle distances with baselines");
  ev->add_option("--checkpoint", checkpoint);
  ev->add_option("--dataset", dataset)->required();
  ev->add_option("--oracle", oracle_csv)->required();
  ev->add_option("--out", out_dir)->required();
  ev->add_option("--seed", seed, "random baseline seed");
  ev->add_flag("--oracle-as-model", oracle_as_model, "use the oracle matrix as model distances");

  auto* ver = app.add_subcommand("verify", "check the non-embeddability and rank results");
  ver->add_option("which", which)->required()->check(CLI::IsMember({"theorem1", "prop1"}));
  ver->add_option("--d2", d2_path, "replace the squared-distance matrix (CSV)");

  auto* bch = app.add_subcommand("bench", "seconds per training epoch over n and p sweeps");
  bch->add_option("--n-list", bench.n_list)->delimiter(',');
  bch->add_option("--p-list", bench.p_list)->delimiter(',');
  bch->add_option("--graphs", bench.graphs);
  bch->add_option("--warmup", bench.warmup_epochs);
  bch->add_option("--epochs", bench.timed_epochs);
  bch->add_option("--seed", seed);
  bch->add_option("--out", out_dir, "output directory; writes bench.csv")->required();

  auto* tu = app.add_subcommand("tu-import", "convert a plain-text benchmark dataset to JSON lines");
  tu->add_option("--dir", tu_dir)->required();
  tu->add_option("--name", tu_name, "dataset prefix; detected from *_A.txt when omitted");
  tu->add_option("--out", out_dir, "output directory; writes <name>.jsonl")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (gen->parsed()) {
      const CorpusRecipe r = recipe == "small" ? CorpusRecipe::small(max_n) : CorpusRecipe::standard();
      const fs::path path = fs::path(out_dir) / "corpus.jsonl";
      cmd_gen(r, seed, path, count);
      out << "wrote " << path.string() << '\n';
    } else if (oracle->parsed()) {
      OracleBudget b;
      b.max_vertices_exact = budget;
      const fs::path path = fs::path(out_dir) / "oracle.csv";
      const DistanceMatrix dm = cmd_oracle(dataset, path, b, threads);
      out << "wrote " << dm.size() << " x " << dm.size() << " matrix to " << path.string() << '\n';
    } else if (trn->parsed()) {
      RunConfig cfg = load_run_config(config_path);
      if (seed_override) cfg.train.seed = *seed_override;
      if (!out_dir.empty()) cfg.output_dir = out_dir;
      cmd_train(cfg, &out);
    } else if (ev->parsed()) {
      if (!oracle_as_model && checkpoint.empty()) {
        err << "eval-distances: --checkpoint is required unless --oracle-as-model is given\n";
        return kUsage;
      }
      const json report = cmd_eval_distances({checkpoint, dataset, oracle_csv, out_dir, seed, oracle_as_model});
      for (const auto& row : report["rows"]) {
        out << row["label"].get<std::string>() << " mse=" << row["mse"].get<double>()
            << " pearson=" << (row["pearson"].is_null() ? std::string("n/a") : std::to_string(row["pearson"].get<double>()))
            << '\n';
      }
    } else if (ver->parsed()) {
      bool pass;
      if (which == "theorem1") {
        const Eigen::MatrixXd d2 = d2_path.empty() ? counterexample_squared_distances() : io::read_matrix_csv(d2_path);
        pass = verify_theorem1(d2, out);
      } else {
        pass = verify_prop1(out);
      }
      return pass ? kOk : kFailure;
    } else if (bch->parsed()) {
      bench.seed = seed;
      const fs::path path = fs::path(out_dir) / "bench.csv";
      const auto rows = cmd_bench(bench, path);
      out << "wrote " << rows.size() << " rows to " << path.string() << '\n';
    } else if (tu->parsed()) {
      const Dataset ds = io::load_tu_dataset(tu_dir, tu_name);
      const fs::path path = fs::path(out_dir) / (ds.name + ".jsonl");
      io::write_dataset(ds, path);
      out << "wrote " << ds.graphs.size() << " graphs to " << path.string() << '\n';
    }
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kOk;
}

}  // namespace pignn::cli
