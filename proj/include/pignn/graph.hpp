#pragma once

#include <Eigen/Dense>

#include "pignn/errors.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace pignn {

using Edge = std::pair<int, int>;

// Regression target vector or class id.
using Target = std::variant<std::monostate, Eigen::VectorXd, int>;

// Undirected simple graph. Edges are stored normalized (u < v), sorted and
// unique; the constructor enforces this.
class Graph {
 public:
  Graph() = default;
  Graph(int num_vertices, std::vector<Edge> edges);

  int num_vertices() const { return n_; }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }

  const std::optional<std::vector<int>>& node_labels() const { return labels_; }
  const std::optional<Eigen::MatrixXd>& node_attrs() const { return attrs_; }
  const Target& target() const { return target_; }

  Graph& set_node_labels(std::vector<int> labels);
  Graph& set_node_attrs(Eigen::MatrixXd attrs);
  Graph& set_target(Target t);

  std::vector<int> degrees() const;
  bool is_connected() const;

  friend bool operator==(const Graph& a, const Graph& b);

 private:
  int n_ = 0;
  std::vector<Edge> edges_;
  std::optional<std::vector<int>> labels_;
  std::optional<Eigen::MatrixXd> attrs_;
  Target target_;
};

struct TaskSpec {
  enum class Kind { Classification, Regression };
  Kind kind = Kind::Regression;
  int num_classes = 0;  // classification only
  int target_dim = 1;   // regression only

  static TaskSpec classification(int k) { return {Kind::Classification, k, 0}; }
  static TaskSpec regression(int dim) { return {Kind::Regression, 0, dim}; }
  bool is_classification() const { return kind == Kind::Classification; }
  int output_dim() const { return is_classification() ? num_classes : target_dim; }
};

struct Dataset {
  std::vector<Graph> graphs;
  TaskSpec task;
  std::string name;

  // Throws SchemaError if a target is missing or inconsistent with task.
  void validate() const;
  int max_vertices() const;
};

// Symmetric 0/1 matrix with zero diagonal.
Eigen::MatrixXd adjacency(const Graph& g);

// Zero-extends a square matrix to n_target x n_target.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
pad_adjacency(const Eigen::MatrixBase<Derived>& a, Eigen::Index n_target);

// Columns: degree, number of triangles through the vertex.
Eigen::MatrixXd structural_features(const Graph& g);

// Feature layout shared by every graph of a dataset:
// [degree, triangles | one-hot labels | attrs].
struct FeatureSchema {
  int label_alphabet = 0;  // 0 when graphs carry no labels
  int attr_dim = 0;        // 0 when graphs carry no attributes

  int dim() const { return 2 + label_alphabet + attr_dim; }
  static FeatureSchema infer(const Dataset& ds);
  static FeatureSchema infer(const std::vector<Graph>& graphs);
};

Eigen::MatrixXd build_vertex_matrix(const Graph& g, const FeatureSchema& schema);
inline Eigen::MatrixXd build_vertex_matrix(const Graph& g) {
  return build_vertex_matrix(g, FeatureSchema::infer(std::vector<Graph>{g}));
}

enum class GraphKind {
  Path,
  Cycle,
  Grid,
  Complete,
  Star,
  ErdosRenyi,
  BarabasiAlbert,
  WattsStrogatz
};

std::string to_string(GraphKind kind);
GraphKind graph_kind_from_string(const std::string& s);

struct GeneratorParams {
  int n = 0;            // vertices (grid: rows * cols is used instead)
  int rows = 0;         // grid
  int cols = 0;         // grid
  double prob = 0.5;    // erdos_renyi edge probability, watts_strogatz rewiring
  int attach = 1;       // barabasi_albert edges per new vertex
  int neighbors = 2;    // watts_strogatz ring degree (even)
  int max_retries = 100;
};

// Connected graph with at least one edge; deterministic in (kind, params, seed).
// Random kinds that keep producing disconnected graphs throw after
// params.max_retries attempts.
Graph generate(GraphKind kind, const GeneratorParams& params, std::uint64_t seed);

struct RecipeEntry {
  GraphKind kind;
  int count = 0;
  int n_min = 2;
  int n_max = 9;
  double prob = 0.5;
  int attach = 1;
  int neighbors = 2;
  std::vector<int> sizes;  // when non-empty, cycled instead of drawing n
};

struct CorpusRecipe {
  std::vector<RecipeEntry> entries;

  // 191 connected graphs on 2..9 vertices.
  static CorpusRecipe standard();
  // About 120 connected graphs on 2..max_n vertices.
  static CorpusRecipe small(int max_n = 7);
  int total() const;
};

// Regression dataset with target y = number of vertices.
Dataset synthetic_corpus(const CorpusRecipe& recipe, std::uint64_t seed);

// Vertex v of g becomes vertex perm[v] of the result.
Graph permute_graph(const Graph& g, const std::vector<int>& perm);

bool is_permutation(const std::vector<int>& perm, int n);

// Permutation matrix P with P(perm[v], v) = 1, so that
// adjacency(permute_graph(g, perm)) = P * adjacency(g) * P^T.
Eigen::MatrixXd permutation_matrix(const std::vector<int>& perm);

// ---------------------------------------------------------------------------

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
pad_adjacency(const Eigen::MatrixBase<Derived>& a, Eigen::Index n_target) {
  using Scalar = typename Derived::Scalar;
  if (n_target < a.rows() || n_target < a.cols()) {
    throw SizeError("pad_adjacency: target size " +
                                std::to_string(n_target) + " smaller than " +
                                std::to_string(a.rows()));
  }
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(n_target, n_target);
  out.topLeftCorner(a.rows(), a.cols()) = a;
  return out;
}

}  // namespace pignn
