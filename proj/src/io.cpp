#include "pignn/io.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace pignn::io {

namespace {

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw SchemaError(where + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw SchemaError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read_key(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw SchemaError(where + "." + key + ": " + e.what());
  }
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  std::vector<double> data;
  data.reserve(m.size());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  return {{"shape", {m.rows(), m.cols()}}, {"data", data}};
}

Eigen::MatrixXd matrix_from_json(const json& j, const std::string& name) {
  const auto shape = j.at("shape").get<std::vector<Eigen::Index>>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (shape.size() != 2 || static_cast<std::size_t>(shape[0] * shape[1]) != data.size()) {
    throw SchemaError("checkpoint tensor '" + name + "': shape does not match data length");
  }
  Eigen::MatrixXd m(shape[0], shape[1]);
  for (Eigen::Index i = 0; i < shape[0]; ++i)
    for (Eigen::Index k = 0; k < shape[1]; ++k) m(i, k) = data[i * shape[1] + k];
  return m;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && lines.back().find_first_not_of(" \t") == std::string::npos) lines.pop_back();
  return lines;
}

std::vector<double> parse_numbers(const std::string& line, const std::string& file, long lineno) {
  std::vector<double> out;
  std::string token;
  std::stringstream ss(line);
  while (std::getline(ss, token, ',')) {
    const auto first = token.find_first_not_of(" \t");
    if (first == std::string::npos) throw ParseError(file, lineno, "empty field");
    try {
      std::size_t used = 0;
      out.push_back(std::stod(token.substr(first), &used));
    } catch (const std::exception&) {
      throw ParseError(file, lineno, "not a number: '" + token + "'");
    }
  }
  if (out.empty()) throw ParseError(file, lineno, "empty line");
  return out;
}

long parse_index(const std::string& line, const std::string& file, long lineno) {
  const auto nums = parse_numbers(line, file, lineno);
  if (nums.size() != 1 || nums[0] != std::floor(nums[0])) {
    throw ParseError(file, lineno, "expected a single integer");
  }
  return static_cast<long>(nums[0]);
}

std::string kind_to_string(PlanMode m) { return m == PlanMode::Learned ? "learned" : "frozen_uniform"; }

}  // namespace

// --- graphs and datasets ------------------------------------------------------

json graph_to_json(const Graph& g) {
  json j;
  j["n"] = g.num_vertices();
  json edges = json::array();
  for (const auto& [u, v] : g.edges()) edges.push_back({u, v});
  j["edges"] = edges;
  j["labels"] = g.node_labels() ? json(*g.node_labels()) : json(nullptr);
  if (const auto& attrs = g.node_attrs()) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < attrs->rows(); ++i) {
      std::vector<double> row(attrs->cols());
      for (Eigen::Index k = 0; k < attrs->cols(); ++k) row[k] = (*attrs)(i, k);
      rows.push_back(row);
    }
    j["attrs"] = rows;
  } else {
    j["attrs"] = nullptr;
  }
  const Target& t = g.target();
  if (const int* cls = std::get_if<int>(&t)) {
    j["target"] = *cls;
  } else if (const auto* vec = std::get_if<Eigen::VectorXd>(&t)) {
    if (vec->size() == 1) {
      j["target"] = (*vec)[0];
    } else {
      j["target"] = std::vector<double>(vec->data(), vec->data() + vec->size());
    }
  } else {
    j["target"] = nullptr;
  }
  return j;
}

Graph graph_from_json(const json& j) {
  reject_unknown_keys(j, {"n", "edges", "labels", "attrs", "target"}, "graph");
  try {
    const int n = j.at("n").get<int>();
    std::vector<Edge> edges;
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2) throw SchemaError("graph: edge must be [u, v]");
      edges.emplace_back(e[0].get<int>(), e[1].get<int>());
    }
    Graph g(n, std::move(edges));
    if (j.contains("labels") && !j["labels"].is_null()) g.set_node_labels(j["labels"].get<std::vector<int>>());
    if (j.contains("attrs") && !j["attrs"].is_null()) {
      const auto rows = j["attrs"].get<std::vector<std::vector<double>>>();
      const std::size_t d = rows.empty() ? 0 : rows[0].size();
      Eigen::MatrixXd attrs(rows.size(), d);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != d) throw SchemaError("graph: ragged attribute rows");
        for (std::size_t k = 0; k < d; ++k) attrs(i, k) = rows[i][k];
      }
      g.set_node_attrs(std::move(attrs));
    }
    if (j.contains("target")) {
      const json& t = j["target"];
      if (t.is_number_integer()) {
        g.set_target(t.get<int>());
      } else if (t.is_number()) {
        Eigen::VectorXd y(1);
        y[0] = t.get<double>();
        g.set_target(y);
      } else if (t.is_array()) {
        const auto vals = t.get<std::vector<double>>();
        g.set_target(Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(vals.data(), vals.size())));
      } else if (!t.is_null()) {
        throw SchemaError("graph: target must be a number, an array or null");
      }
    }
    return g;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("graph: ") + e.what());
  }
}

void write_dataset(const Dataset& ds, std::ostream& out) {
  json header = {{"task", ds.task.is_classification() ? "classification" : "regression"},
                 {"num_classes", ds.task.is_classification() ? json(ds.task.num_classes) : json(nullptr)},
                 {"target_dim", ds.task.is_classification() ? json(nullptr) : json(ds.task.target_dim)},
                 {"name", ds.name}};
  out << header.dump() << '\n';
  for (const auto& g : ds.graphs) out << graph_to_json(g).dump() << '\n';
}

void write_dataset(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  write_dataset(ds, out);
  if (!out) throw IoError("write failed: " + path.string());
}

Dataset read_dataset(std::istream& in, const std::string& source) {
  Dataset ds;
  std::string line;
  long lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(source, lineno, e.what());
    }
    try {
      if (!have_header) {
        reject_unknown_keys(j, {"task", "num_classes", "target_dim", "name"}, "dataset header");
        const std::string task = j.at("task").get<std::string>();
        if (task == "classification") {
          ds.task = TaskSpec::classification(j.at("num_classes").get<int>());
        } else if (task == "regression") {
          const int dim = j.contains("target_dim") && !j["target_dim"].is_null() ? j["target_dim"].get<int>() : 1;
          ds.task = TaskSpec::regression(dim);
        } else {
          throw SchemaError("dataset header: unknown task '" + task + "'");
        }
        if (j.contains("name")) ds.name = j["name"].get<std::string>();
        have_header = true;
        continue;
      }
      Graph g = graph_from_json(j);
      if (!ds.task.is_classification()) {
        if (const int* v = std::get_if<int>(&g.target())) {
          Eigen::VectorXd y(1);
          y[0] = *v;
          g.set_target(y);
        }
      }
      ds.graphs.push_back(std::move(g));
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(source, lineno, e.what());
    }
  }
  if (!have_header) throw ParseError(source, lineno, "missing dataset header line");
  ds.validate();
  return ds;
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  return read_dataset(in, path.string());
}

// --- matrices -----------------------------------------------------------------

void write_matrix_csv(const Eigen::MatrixXd& m, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    rows.push_back(parse_numbers(lines[i], path.string(), static_cast<long>(i + 1)));
    if (rows.back().size() != rows.front().size()) {
      throw ParseError(path.string(), static_cast<long>(i + 1), "ragged row");
    }
  }
  Eigen::MatrixXd m(rows.size(), rows.empty() ? 0 : rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

void write_distance_matrix(const DistanceMatrix& dm, const std::filesystem::path& csv_path) {
  write_matrix_csv(dm.values, csv_path);
  std::vector<std::string> ids = dm.ids;
  if (ids.empty())
    for (Eigen::Index i = 0; i < dm.values.rows(); ++i) ids.push_back(std::to_string(i));
  write_json({{"n", dm.values.rows()}, {"ids", ids}}, csv_path.string() + ".json");
}

DistanceMatrix read_distance_matrix(const std::filesystem::path& csv_path) {
  DistanceMatrix dm;
  dm.values = read_matrix_csv(csv_path);
  const std::filesystem::path sidecar = csv_path.string() + ".json";
  if (std::filesystem::exists(sidecar)) {
    const json j = read_json(sidecar);
    dm.ids = j.at("ids").get<std::vector<std::string>>();
    if (static_cast<Eigen::Index>(dm.ids.size()) != dm.values.rows()) {
      throw SchemaError("distance matrix sidecar lists " + std::to_string(dm.ids.size()) +
                        " ids for " + std::to_string(dm.values.rows()) + " rows");
    }
  }
  return dm;
}

// --- configs ------------------------------------------------------------------

json config_to_json(const PiGnnConfig& cfg) {
  json task = cfg.task.is_classification()
                  ? json{{"kind", "classification"}, {"num_classes", cfg.task.num_classes}}
                  : json{{"kind", "regression"}, {"target_dim", cfg.task.target_dim}};
  return {{"num_latent", cfg.num_latent},
          {"feature_hidden", cfg.feature_hidden},
          {"alpha", cfg.alpha},
          {"use_dustbin", cfg.use_dustbin},
          {"sinkhorn",
           {{"epsilon", cfg.sinkhorn.epsilon},
            {"max_iterations", cfg.sinkhorn.max_iterations},
            {"tolerance", cfg.sinkhorn.tolerance}}},
          {"head_hidden", {cfg.head_hidden.first, cfg.head_hidden.second}},
          {"task", task},
          {"plan_mode", kind_to_string(cfg.plan_mode)},
          {"layer_norm_eps", cfg.layer_norm_eps}};
}

PiGnnConfig config_from_json(const json& j) {
  const std::string where = "model";
  reject_unknown_keys(j, {"num_latent", "feature_hidden", "alpha", "use_dustbin", "sinkhorn", "head_hidden",
                          "task", "plan_mode", "layer_norm_eps"},
                      where);
  PiGnnConfig cfg;
  read_key(j, "num_latent", cfg.num_latent, where);
  read_key(j, "feature_hidden", cfg.feature_hidden, where);
  read_key(j, "alpha", cfg.alpha, where);
  read_key(j, "use_dustbin", cfg.use_dustbin, where);
  read_key(j, "layer_norm_eps", cfg.layer_norm_eps, where);
  if (j.contains("sinkhorn")) {
    const json& s = j["sinkhorn"];
    reject_unknown_keys(s, {"epsilon", "max_iterations", "tolerance"}, "model.sinkhorn");
    read_key(s, "epsilon", cfg.sinkhorn.epsilon, "model.sinkhorn");
    read_key(s, "max_iterations", cfg.sinkhorn.max_iterations, "model.sinkhorn");
    read_key(s, "tolerance", cfg.sinkhorn.tolerance, "model.sinkhorn");
  }
  if (j.contains("head_hidden")) {
    std::vector<int> h;
    read_key(j, "head_hidden", h, where);
    if (h.size() != 2) throw SchemaError("model.head_hidden: expected two sizes");
    cfg.head_hidden = {h[0], h[1]};
  }
  if (j.contains("task")) {
    const json& t = j["task"];
    reject_unknown_keys(t, {"kind", "num_classes", "target_dim"}, "model.task");
    std::string kind;
    read_key(t, "kind", kind, "model.task");
    if (kind == "classification") {
      int k = 0;
      read_key(t, "num_classes", k, "model.task");
      cfg.task = TaskSpec::classification(k);
    } else if (kind == "regression") {
      int dim = 1;
      read_key(t, "target_dim", dim, "model.task");
      cfg.task = TaskSpec::regression(dim);
    } else {
      throw SchemaError("model.task.kind: expected 'classification' or 'regression'");
    }
  }
  if (j.contains("plan_mode")) {
    std::string mode;
    read_key(j, "plan_mode", mode, where);
    if (mode == "learned") {
      cfg.plan_mode = PlanMode::Learned;
    } else if (mode == "frozen_uniform") {
      cfg.plan_mode = PlanMode::FrozenUniform;
    } else {
      throw SchemaError("model.plan_mode: expected 'learned' or 'frozen_uniform'");
    }
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw SchemaError(e.what());
  }
  return cfg;
}

json train_config_to_json(const TrainConfig& cfg) {
  return {{"batch_size", cfg.batch_size},
          {"epochs", cfg.epochs},
          {"learning_rate", cfg.learning_rate},
          {"adam_betas", {cfg.adam_beta1, cfg.adam_beta2}},
          {"adam_eps", cfg.adam_eps},
          {"seed", cfg.seed},
          {"val_fraction", cfg.val_fraction},
          {"plateau_decay", cfg.plateau_decay},
          {"plateau_patience", cfg.plateau_patience},
          {"plateau_factor", cfg.plateau_factor}};
}

TrainConfig train_config_from_json(const json& j) {
  const std::string where = "train";
  reject_unknown_keys(j, {"batch_size", "epochs", "learning_rate", "adam_betas", "adam_eps", "seed",
                          "val_fraction", "plateau_decay", "plateau_patience", "plateau_factor"},
                      where);
  TrainConfig cfg;
  read_key(j, "batch_size", cfg.batch_size, where);
  read_key(j, "epochs", cfg.epochs, where);
  read_key(j, "learning_rate", cfg.learning_rate, where);
  read_key(j, "adam_eps", cfg.adam_eps, where);
  read_key(j, "seed", cfg.seed, where);
  read_key(j, "val_fraction", cfg.val_fraction, where);
  read_key(j, "plateau_decay", cfg.plateau_decay, where);
  read_key(j, "plateau_patience", cfg.plateau_patience, where);
  read_key(j, "plateau_factor", cfg.plateau_factor, where);
  if (j.contains("adam_betas")) {
    std::vector<double> b;
    read_key(j, "adam_betas", b, where);
    if (b.size() != 2) throw SchemaError("train.adam_betas: expected two values");
    cfg.adam_beta1 = b[0];
    cfg.adam_beta2 = b[1];
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw SchemaError(e.what());
  }
  return cfg;
}

// --- checkpoints and reports --------------------------------------------------

json checkpoint_to_json(const Checkpoint& ck) {
  json tensors = json::object();
  for_each_param(ck.params, [&](const char* name, const Eigen::MatrixXd& m) { tensors[name] = matrix_to_json(m); });
  return {{"format_version", 1},
          {"config", config_to_json(ck.config)},
          {"dims",
           {{"feature_dim", ck.dims.feature_dim},
            {"attr_dim", ck.dims.attr_dim},
            {"label_alphabet", ck.dims.label_alphabet}}},
          {"tensors", tensors}};
}

Checkpoint checkpoint_from_json(const json& j) {
  reject_unknown_keys(j, {"format_version", "config", "dims", "tensors"}, "checkpoint");
  if (j.value("format_version", 0) != 1) throw SchemaError("checkpoint: unsupported format_version");
  Checkpoint ck;
  ck.config = config_from_json(j.at("config"));
  const json& d = j.at("dims");
  ck.dims.feature_dim = d.at("feature_dim").get<int>();
  ck.dims.attr_dim = d.at("attr_dim").get<int>();
  ck.dims.label_alphabet = d.at("label_alphabet").get<int>();
  const json& tensors = j.at("tensors");
  std::set<std::string> known;
  for (const auto& [name, member] : PiGnnParams::fields()) {
    known.insert(name);
    if (tensors.contains(name)) ck.params.*member = matrix_from_json(tensors.at(name), name);
  }
  for (const auto& [name, value] : tensors.items()) {
    if (!known.count(name)) throw SchemaError("checkpoint: unknown tensor '" + name + "'");
  }
  // Shapes must agree with a fresh initialization of the same config.
  const PiGnnParams expected = init_params(ck.config, ck.dims, 0);
  zip_params(expected, ck.params, [](const char* name, const Eigen::MatrixXd& e, const Eigen::MatrixXd& got) {
    if (e.rows() != got.rows() || e.cols() != got.cols()) {
      throw SchemaError(std::string("checkpoint: tensor '") + name + "' has the wrong shape");
    }
  });
  return ck;
}

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  write_json(checkpoint_to_json(ck), path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return checkpoint_from_json(read_json(path)); }

json report_to_json(const TrainReport& report) {
  return {{"train_loss", report.train_loss},
          {"val_loss", report.val_loss},
          {"best_epoch", report.best_epoch},
          {"best_val_loss", report.best_val_loss},
          {"train_indices", report.train_indices},
          {"val_indices", report.val_indices}};
}

void write_json(const json& j, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path.string(), 0, e.what());
  }
}

// --- TU format ----------------------------------------------------------------

Dataset load_tu_dataset(const std::filesystem::path& dir, std::string name) {
  namespace fs = std::filesystem;
  if (name.empty()) {
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
    for (const auto& entry : fs::directory_iterator(dir)) {
      const std::string file = entry.path().filename().string();
      if (file.size() > 6 && file.substr(file.size() - 6) == "_A.txt") {
        name = file.substr(0, file.size() - 6);
        break;
      }
    }
    if (name.empty()) throw IoError("no *_A.txt file in " + dir.string());
  }
  const fs::path a_path = dir / (name + "_A.txt");
  const fs::path ind_path = dir / (name + "_graph_indicator.txt");
  const fs::path gl_path = dir / (name + "_graph_labels.txt");
  const fs::path nl_path = dir / (name + "_node_labels.txt");
  const fs::path na_path = dir / (name + "_node_attributes.txt");
  for (const auto& p : {a_path, ind_path, gl_path}) {
    if (!fs::exists(p)) throw IoError("missing required file " + p.string());
  }

  const auto ind_lines = read_lines(ind_path);
  std::vector<int> node_graph(ind_lines.size());
  int num_graphs = 0;
  for (std::size_t i = 0; i < ind_lines.size(); ++i) {
    const long gid = parse_index(ind_lines[i], ind_path.string(), static_cast<long>(i + 1));
    if (gid < 1) throw ParseError(ind_path.string(), static_cast<long>(i + 1), "graph ids are 1-based");
    if (i > 0 && gid < node_graph[i - 1] + 1) {
      throw ParseError(ind_path.string(), static_cast<long>(i + 1), "graph indicator must be non-decreasing");
    }
    node_graph[i] = static_cast<int>(gid - 1);
    num_graphs = std::max(num_graphs, static_cast<int>(gid));
  }

  // Local vertex ids: offset of each node within its graph.
  std::vector<int> first_node(num_graphs, -1), counts(num_graphs, 0), local(node_graph.size());
  for (std::size_t i = 0; i < node_graph.size(); ++i) {
    const int g = node_graph[i];
    if (first_node[g] < 0) first_node[g] = static_cast<int>(i);
    local[i] = counts[g]++;
  }
  for (int g = 0; g < num_graphs; ++g) {
    if (counts[g] == 0) throw ParseError(ind_path.string(), 0, "graph " + std::to_string(g + 1) + " has no nodes");
  }

  std::vector<std::vector<Edge>> edges(num_graphs);
  const auto a_lines = read_lines(a_path);
  for (std::size_t i = 0; i < a_lines.size(); ++i) {
    const long lineno = static_cast<long>(i + 1);
    const auto nums = parse_numbers(a_lines[i], a_path.string(), lineno);
    if (nums.size() != 2) throw ParseError(a_path.string(), lineno, "expected 'u, v'");
    const long u = static_cast<long>(nums[0]) - 1, v = static_cast<long>(nums[1]) - 1;
    if (u < 0 || v < 0 || u >= static_cast<long>(node_graph.size()) || v >= static_cast<long>(node_graph.size())) {
      throw ParseError(a_path.string(), lineno, "node id out of range");
    }
    if (node_graph[u] != node_graph[v]) throw ParseError(a_path.string(), lineno, "edge joins two graphs");
    if (u == v) continue;
    edges[node_graph[u]].emplace_back(local[u], local[v]);
  }

  const auto gl_lines = read_lines(gl_path);
  if (static_cast<int>(gl_lines.size()) != num_graphs) {
    throw ParseError(gl_path.string(), static_cast<long>(gl_lines.size()),
                     "expected " + std::to_string(num_graphs) + " graph labels");
  }
  std::vector<long> raw_graph_labels;
  for (std::size_t i = 0; i < gl_lines.size(); ++i)
    raw_graph_labels.push_back(parse_index(gl_lines[i], gl_path.string(), static_cast<long>(i + 1)));
  std::map<long, int> class_map;
  for (long l : raw_graph_labels) class_map.emplace(l, 0);
  int next = 0;
  for (auto& [raw, id] : class_map) id = next++;

  std::optional<std::vector<int>> node_labels;
  if (fs::exists(nl_path)) {
    const auto lines = read_lines(nl_path);
    if (lines.size() != node_graph.size()) {
      throw ParseError(nl_path.string(), static_cast<long>(lines.size()), "node label count != node count");
    }
    std::vector<long> raw;
    std::map<long, int> alphabet;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      raw.push_back(parse_index(lines[i], nl_path.string(), static_cast<long>(i + 1)));
      alphabet.emplace(raw.back(), 0);
    }
    int k = 0;
    for (auto& [l, id] : alphabet) id = k++;
    node_labels.emplace();
    for (long l : raw) node_labels->push_back(alphabet[l]);
  }

  std::optional<Eigen::MatrixXd> node_attrs;
  if (fs::exists(na_path)) {
    const auto lines = read_lines(na_path);
    if (lines.size() != node_graph.size()) {
      throw ParseError(na_path.string(), static_cast<long>(lines.size()), "attribute row count != node count");
    }
    for (std::size_t i = 0; i < lines.size(); ++i) {
      const auto row = parse_numbers(lines[i], na_path.string(), static_cast<long>(i + 1));
      if (!node_attrs) node_attrs = Eigen::MatrixXd(lines.size(), row.size());
      if (static_cast<Eigen::Index>(row.size()) != node_attrs->cols()) {
        throw ParseError(na_path.string(), static_cast<long>(i + 1), "ragged attribute row");
      }
      for (std::size_t k = 0; k < row.size(); ++k) (*node_attrs)(i, k) = row[k];
    }
  }

  Dataset ds;
  ds.name = name;
  ds.task = TaskSpec::classification(static_cast<int>(class_map.size()));
  for (int g = 0; g < num_graphs; ++g) {
    Graph graph(counts[g], edges[g]);
    if (node_labels) {
      graph.set_node_labels(std::vector<int>(node_labels->begin() + first_node[g],
                                             node_labels->begin() + first_node[g] + counts[g]));
    }
    if (node_attrs) graph.set_node_attrs(node_attrs->middleRows(first_node[g], counts[g]));
    graph.set_target(class_map[raw_graph_labels[g]]);
    ds.graphs.push_back(std::move(graph));
  }
  return ds;
}

}  // namespace pignn::io
