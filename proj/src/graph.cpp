#include "pignn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

namespace pignn {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

using EdgeSet = std::set<Edge>;

void add_edge(EdgeSet& edges, int u, int v) {
  if (u == v) return;
  edges.insert({std::min(u, v), std::max(u, v)});
}

Graph from_set(int n, const EdgeSet& edges) {
  return Graph(n, std::vector<Edge>(edges.begin(), edges.end()));
}

Graph erdos_renyi(int n, double prob, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(prob);
  EdgeSet edges;
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v)
      if (coin(rng)) add_edge(edges, u, v);
  return from_set(n, edges);
}

Graph barabasi_albert(int n, int attach, std::mt19937_64& rng) {
  if (attach < 1 || attach >= n) {
    throw std::invalid_argument("barabasi_albert: need 1 <= attach < n");
  }
  EdgeSet edges;
  // Seed with a star on attach + 1 vertices; `ends` lists each vertex once per
  // incident edge so uniform draws are degree-proportional.
  std::vector<int> ends;
  for (int v = 1; v <= attach; ++v) {
    add_edge(edges, 0, v);
    ends.push_back(0);
    ends.push_back(v);
  }
  for (int v = attach + 1; v < n; ++v) {
    std::set<int> targets;
    while (static_cast<int>(targets.size()) < attach) {
      std::uniform_int_distribution<std::size_t> pick(0, ends.size() - 1);
      targets.insert(ends[pick(rng)]);
    }
    for (int t : targets) {
      add_edge(edges, v, t);
      ends.push_back(v);
      ends.push_back(t);
    }
  }
  return from_set(n, edges);
}

Graph watts_strogatz(int n, int neighbors, double beta, std::mt19937_64& rng) {
  if (neighbors < 2 || neighbors % 2 != 0 || neighbors >= n) {
    throw std::invalid_argument("watts_strogatz: need even 2 <= neighbors < n");
  }
  EdgeSet edges;
  for (int u = 0; u < n; ++u)
    for (int j = 1; j <= neighbors / 2; ++j) add_edge(edges, u, (u + j) % n);

  std::bernoulli_distribution coin(beta);
  std::uniform_int_distribution<int> vertex(0, n - 1);
  for (int j = 1; j <= neighbors / 2; ++j) {
    for (int u = 0; u < n; ++u) {
      const int v = (u + j) % n;
      if (!coin(rng)) continue;
      const int w = vertex(rng);
      const Edge candidate{std::min(u, w), std::max(u, w)};
      if (w == u || edges.count(candidate)) continue;
      edges.erase({std::min(u, v), std::max(u, v)});
      edges.insert(candidate);
    }
  }
  return from_set(n, edges);
}

}  // namespace

Graph::Graph(int num_vertices, std::vector<Edge> edges) : n_(num_vertices) {
  if (num_vertices < 1) throw SizeError("Graph: num_vertices must be >= 1");
  for (auto& [u, v] : edges) {
    if (u < 0 || v < 0 || u >= n_ || v >= n_) {
      throw std::invalid_argument("Graph: edge endpoint out of range (" +
                                  std::to_string(u) + "," + std::to_string(v) + ")");
    }
    if (u == v) throw std::invalid_argument("Graph: self-loop at vertex " + std::to_string(u));
    if (u > v) std::swap(u, v);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  edges_ = std::move(edges);
}

Graph& Graph::set_node_labels(std::vector<int> labels) {
  if (static_cast<int>(labels.size()) != n_) {
    throw SizeError("Graph: label count " + std::to_string(labels.size()) +
                    " != num_vertices " + std::to_string(n_));
  }
  labels_ = std::move(labels);
  return *this;
}

Graph& Graph::set_node_attrs(Eigen::MatrixXd attrs) {
  if (attrs.rows() != n_) {
    throw SizeError("Graph: attribute rows " + std::to_string(attrs.rows()) +
                    " != num_vertices " + std::to_string(n_));
  }
  attrs_ = std::move(attrs);
  return *this;
}

Graph& Graph::set_target(Target t) {
  target_ = std::move(t);
  return *this;
}

std::vector<int> Graph::degrees() const {
  std::vector<int> deg(n_, 0);
  for (const auto& [u, v] : edges_) {
    ++deg[u];
    ++deg[v];
  }
  return deg;
}

bool Graph::is_connected() const {
  std::vector<std::vector<int>> nbrs(n_);
  for (const auto& [u, v] : edges_) {
    nbrs[u].push_back(v);
    nbrs[v].push_back(u);
  }
  std::vector<char> seen(n_, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int visited = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int w : nbrs[u]) {
      if (!seen[w]) {
        seen[w] = 1;
        ++visited;
        stack.push_back(w);
      }
    }
  }
  return visited == n_;
}

bool operator==(const Graph& a, const Graph& b) {
  if (a.n_ != b.n_ || a.edges_ != b.edges_ || a.labels_ != b.labels_) return false;
  if (a.attrs_.has_value() != b.attrs_.has_value()) return false;
  if (a.attrs_ && *a.attrs_ != *b.attrs_) return false;
  if (a.target_.index() != b.target_.index()) return false;
  if (const auto* va = std::get_if<Eigen::VectorXd>(&a.target_)) {
    const auto& vb = std::get<Eigen::VectorXd>(b.target_);
    return va->size() == vb.size() && *va == vb;
  }
  if (const auto* ia = std::get_if<int>(&a.target_)) return *ia == std::get<int>(b.target_);
  return true;
}

void Dataset::validate() const {
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const Target& t = graphs[i].target();
    const std::string where = "graph " + std::to_string(i) + ": ";
    if (task.is_classification()) {
      const int* cls = std::get_if<int>(&t);
      if (!cls) throw SchemaError(where + "classification target must be a class id");
      if (*cls < 0 || *cls >= task.num_classes) {
        throw SchemaError(where + "class id " + std::to_string(*cls) + " out of range");
      }
    } else {
      const auto* vec = std::get_if<Eigen::VectorXd>(&t);
      if (!vec) throw SchemaError(where + "regression target must be a real vector");
      if (vec->size() != task.target_dim) {
        throw SchemaError(where + "target dimension " + std::to_string(vec->size()) +
                          " != " + std::to_string(task.target_dim));
      }
    }
  }
}

int Dataset::max_vertices() const {
  int n = 0;
  for (const auto& g : graphs) n = std::max(n, g.num_vertices());
  return n;
}

Eigen::MatrixXd adjacency(const Graph& g) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(g.num_vertices(), g.num_vertices());
  for (const auto& [u, v] : g.edges()) {
    a(u, v) = 1.0;
    a(v, u) = 1.0;
  }
  return a;
}

Eigen::MatrixXd structural_features(const Graph& g) {
  const int n = g.num_vertices();
  std::vector<std::vector<char>> adj(n, std::vector<char>(n, 0));
  for (const auto& [u, v] : g.edges()) adj[u][v] = adj[v][u] = 1;

  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(n, 2);
  const auto deg = g.degrees();
  for (int v = 0; v < n; ++v) f(v, 0) = deg[v];
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v) {
      if (!adj[u][v]) continue;
      for (int w = v + 1; w < n; ++w) {
        if (adj[u][w] && adj[v][w]) {
          f(u, 1) += 1;
          f(v, 1) += 1;
          f(w, 1) += 1;
        }
      }
    }
  return f;
}

FeatureSchema FeatureSchema::infer(const std::vector<Graph>& graphs) {
  FeatureSchema schema;
  bool any_labels = false, any_attrs = false;
  bool all_labels = true, all_attrs = true;
  int max_label = -1;
  int attr_dim = -1;
  for (const auto& g : graphs) {
    if (const auto& labels = g.node_labels()) {
      any_labels = true;
      for (int l : *labels) {
        if (l < 0) throw SchemaError("negative node label " + std::to_string(l));
        max_label = std::max(max_label, l);
      }
    } else {
      all_labels = false;
    }
    if (const auto& attrs = g.node_attrs()) {
      any_attrs = true;
      if (attr_dim >= 0 && attrs->cols() != attr_dim) {
        throw SchemaError("inconsistent attribute dimension: " + std::to_string(attrs->cols()) +
                          " vs " + std::to_string(attr_dim));
      }
      attr_dim = static_cast<int>(attrs->cols());
    } else {
      all_attrs = false;
    }
  }
  if (any_labels && !all_labels) throw SchemaError("some graphs lack node labels");
  if (any_attrs && !all_attrs) throw SchemaError("some graphs lack node attributes");
  schema.label_alphabet = any_labels ? max_label + 1 : 0;
  schema.attr_dim = any_attrs ? attr_dim : 0;
  return schema;
}

FeatureSchema FeatureSchema::infer(const Dataset& ds) { return infer(ds.graphs); }

Eigen::MatrixXd build_vertex_matrix(const Graph& g, const FeatureSchema& schema) {
  const int n = g.num_vertices();
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, schema.dim());
  q.leftCols(2) = structural_features(g);

  if (schema.label_alphabet > 0) {
    if (!g.node_labels()) throw SchemaError("graph lacks node labels required by schema");
    for (int v = 0; v < n; ++v) {
      const int l = (*g.node_labels())[v];
      if (l < 0 || l >= schema.label_alphabet) {
        throw SchemaError("label " + std::to_string(l) + " outside alphabet of size " +
                          std::to_string(schema.label_alphabet));
      }
      q(v, 2 + l) = 1.0;
    }
  } else if (g.node_labels()) {
    throw SchemaError("graph carries labels but schema has no label alphabet");
  }

  if (schema.attr_dim > 0) {
    if (!g.node_attrs() || g.node_attrs()->cols() != schema.attr_dim) {
      throw SchemaError("graph attributes do not match schema dimension " +
                        std::to_string(schema.attr_dim));
    }
    q.rightCols(schema.attr_dim) = *g.node_attrs();
  } else if (g.node_attrs()) {
    throw SchemaError("graph carries attributes but schema has none");
  }
  return q;
}

std::string to_string(GraphKind kind) {
  switch (kind) {
    case GraphKind::Path: return "path";
    case GraphKind::Cycle: return "cycle";
    case GraphKind::Grid: return "grid";
    case GraphKind::Complete: return "complete";
    case GraphKind::Star: return "star";
    case GraphKind::ErdosRenyi: return "erdos_renyi";
    case GraphKind::BarabasiAlbert: return "barabasi_albert";
    case GraphKind::WattsStrogatz: return "watts_strogatz";
  }
  return "unknown";
}

GraphKind graph_kind_from_string(const std::string& s) {
  static const std::map<std::string, GraphKind> kinds = {
      {"path", GraphKind::Path},
      {"cycle", GraphKind::Cycle},
      {"grid", GraphKind::Grid},
      {"complete", GraphKind::Complete},
      {"star", GraphKind::Star},
      {"erdos_renyi", GraphKind::ErdosRenyi},
      {"barabasi_albert", GraphKind::BarabasiAlbert},
      {"watts_strogatz", GraphKind::WattsStrogatz},
  };
  auto it = kinds.find(s);
  if (it == kinds.end()) throw std::invalid_argument("unknown graph kind '" + s + "'");
  return it->second;
}

Graph generate(GraphKind kind, const GeneratorParams& params, std::uint64_t seed) {
  const int n = params.n;
  EdgeSet edges;
  switch (kind) {
    case GraphKind::Path:
      if (n < 2) throw std::invalid_argument("path: need n >= 2");
      for (int v = 0; v + 1 < n; ++v) add_edge(edges, v, v + 1);
      return from_set(n, edges);
    case GraphKind::Cycle:
      if (n < 3) throw std::invalid_argument("cycle: need n >= 3");
      for (int v = 0; v < n; ++v) add_edge(edges, v, (v + 1) % n);
      return from_set(n, edges);
    case GraphKind::Complete:
      if (n < 2) throw std::invalid_argument("complete: need n >= 2");
      for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v) add_edge(edges, u, v);
      return from_set(n, edges);
    case GraphKind::Star:
      if (n < 2) throw std::invalid_argument("star: need n >= 2");
      for (int v = 1; v < n; ++v) add_edge(edges, 0, v);
      return from_set(n, edges);
    case GraphKind::Grid: {
      int rows = params.rows, cols = params.cols;
      if (rows <= 0 || cols <= 0) {
        // Most square factorization of n.
        rows = static_cast<int>(std::sqrt(static_cast<double>(n)));
        while (rows > 1 && n % rows != 0) --rows;
        cols = rows > 0 ? n / rows : 0;
      }
      if (rows * cols < 2) throw std::invalid_argument("grid: need at least 2 vertices");
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
          const int v = r * cols + c;
          if (c + 1 < cols) add_edge(edges, v, v + 1);
          if (r + 1 < rows) add_edge(edges, v, v + cols);
        }
      return from_set(rows * cols, edges);
    }
    case GraphKind::ErdosRenyi:
    case GraphKind::BarabasiAlbert:
    case GraphKind::WattsStrogatz: {
      if (n < 2) throw std::invalid_argument(to_string(kind) + ": need n >= 2");
      std::mt19937_64 rng(splitmix64(seed));
      for (int attempt = 0; attempt < std::max(1, params.max_retries); ++attempt) {
        Graph g;
        if (kind == GraphKind::ErdosRenyi) {
          g = erdos_renyi(n, params.prob, rng);
        } else if (kind == GraphKind::BarabasiAlbert) {
          g = barabasi_albert(n, params.attach, rng);
        } else {
          g = watts_strogatz(n, params.neighbors, params.prob, rng);
        }
        if (g.num_edges() >= 1 && g.is_connected()) return g;
      }
      throw std::runtime_error(to_string(kind) + ": no connected graph with n=" +
                               std::to_string(n) + " after " +
                               std::to_string(params.max_retries) + " attempts");
    }
  }
  throw std::invalid_argument("generate: unknown kind");
}

CorpusRecipe CorpusRecipe::standard() {
  using K = GraphKind;
  CorpusRecipe r;
  r.entries = {
      {.kind = K::Path, .count = 8, .n_min = 2, .n_max = 9},
      {.kind = K::Cycle, .count = 7, .n_min = 3, .n_max = 9},
      {.kind = K::Complete, .count = 7, .n_min = 3, .n_max = 9},
      {.kind = K::Star, .count = 6, .n_min = 4, .n_max = 9},
      {.kind = K::Grid, .count = 4, .sizes = {4, 6, 8, 9}},
      {.kind = K::ErdosRenyi, .count = 53, .n_min = 6, .n_max = 9, .prob = 0.4},
      {.kind = K::BarabasiAlbert, .count = 53, .n_min = 6, .n_max = 9, .attach = 2},
      {.kind = K::WattsStrogatz, .count = 53, .n_min = 6, .n_max = 9, .prob = 0.3,
       .neighbors = 4},
  };
  return r;
}

CorpusRecipe CorpusRecipe::small(int max_n) {
  using K = GraphKind;
  if (max_n < 4) throw std::invalid_argument("CorpusRecipe::small: max_n must be >= 4");
  CorpusRecipe r;
  std::vector<int> grid_sizes;
  for (int s : {4, 6, 8, 9})
    if (s <= max_n) grid_sizes.push_back(s);
  const int lo = std::max(4, max_n - 3);
  r.entries = {
      {.kind = K::Path, .count = max_n - 1, .n_min = 2, .n_max = max_n},
      {.kind = K::Cycle, .count = max_n - 2, .n_min = 3, .n_max = max_n},
      {.kind = K::Complete, .count = max_n - 2, .n_min = 3, .n_max = max_n},
      {.kind = K::Star, .count = max_n - 3, .n_min = 4, .n_max = max_n},
      {.kind = K::Grid, .count = static_cast<int>(grid_sizes.size()), .sizes = grid_sizes},
      {.kind = K::ErdosRenyi, .count = 33, .n_min = lo, .n_max = max_n, .prob = 0.5},
      {.kind = K::BarabasiAlbert, .count = 33, .n_min = lo, .n_max = max_n, .attach = 2},
      {.kind = K::WattsStrogatz, .count = 32, .n_min = lo, .n_max = max_n, .prob = 0.3,
       .neighbors = 2},
  };
  return r;
}

int CorpusRecipe::total() const {
  int t = 0;
  for (const auto& e : entries) t += e.count;
  return t;
}

Dataset synthetic_corpus(const CorpusRecipe& recipe, std::uint64_t seed) {
  Dataset ds;
  ds.task = TaskSpec::regression(1);
  ds.name = "synthetic";
  std::uint64_t index = 0;
  for (std::size_t e = 0; e < recipe.entries.size(); ++e) {
    const RecipeEntry& entry = recipe.entries[e];
    std::mt19937_64 size_rng(splitmix64(seed ^ splitmix64(e + 1)));
    for (int i = 0; i < entry.count; ++i, ++index) {
      GeneratorParams params;
      if (!entry.sizes.empty()) {
        params.n = entry.sizes[i % entry.sizes.size()];
      } else if (entry.kind == GraphKind::ErdosRenyi || entry.kind == GraphKind::BarabasiAlbert ||
                 entry.kind == GraphKind::WattsStrogatz) {
        params.n = std::uniform_int_distribution<int>(entry.n_min, entry.n_max)(size_rng);
      } else {
        params.n = entry.n_min + i % (entry.n_max - entry.n_min + 1);
      }
      params.prob = entry.prob;
      params.attach = entry.attach;
      params.neighbors = entry.neighbors;
      Graph g = generate(entry.kind, params, splitmix64(seed) ^ splitmix64(index + 0x51ed));
      Eigen::VectorXd y(1);
      y[0] = g.num_vertices();
      g.set_target(y);
      ds.graphs.push_back(std::move(g));
    }
  }
  return ds;
}

bool is_permutation(const std::vector<int>& perm, int n) {
  if (static_cast<int>(perm.size()) != n) return false;
  std::vector<char> seen(n, 0);
  for (int p : perm) {
    if (p < 0 || p >= n || seen[p]) return false;
    seen[p] = 1;
  }
  return true;
}

Graph permute_graph(const Graph& g, const std::vector<int>& perm) {
  const int n = g.num_vertices();
  if (!is_permutation(perm, n)) throw std::invalid_argument("permute_graph: not a permutation");
  std::vector<Edge> edges;
  edges.reserve(g.edges().size());
  for (const auto& [u, v] : g.edges()) edges.emplace_back(perm[u], perm[v]);
  Graph out(n, std::move(edges));
  if (const auto& labels = g.node_labels()) {
    std::vector<int> moved(n);
    for (int v = 0; v < n; ++v) moved[perm[v]] = (*labels)[v];
    out.set_node_labels(std::move(moved));
  }
  if (const auto& attrs = g.node_attrs()) {
    Eigen::MatrixXd moved(attrs->rows(), attrs->cols());
    for (int v = 0; v < n; ++v) moved.row(perm[v]) = attrs->row(v);
    out.set_node_attrs(std::move(moved));
  }
  out.set_target(g.target());
  return out;
}

Eigen::MatrixXd permutation_matrix(const std::vector<int>& perm) {
  const int n = static_cast<int>(perm.size());
  if (!is_permutation(perm, n)) throw std::invalid_argument("permutation_matrix: not a permutation");
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  for (int v = 0; v < n; ++v) p(perm[v], v) = 1.0;
  return p;
}

}  // namespace pignn
